from __future__ import annotations

import json
import random
from pathlib import Path

import pytest
from hypothesis import given, settings, strategies as st

from conftest import corpus
from psta.builder import derive
from psta.derivations import app, ax, pair_intro, proj_elim
from psta.evaluation import evaluate
from psta.generate import random_term
from psta.ptm import PtmSpec
from psta.ptypes import Arrow, TBang, TVar, With, show_type
from psta.sugar import elaborate
from psta.syntax import (
    ParseError, SchemaError, check_with_paths, derivation_to_json, format_distribution,
    parse_derivation, parse_distribution, parse_ptm, parse_term, parse_type, print_term,
)
from psta.terms import App, Bang, BLam, Der, Lam, Pair, Proj, Var

SAMPLE_DIR = Path(__file__).resolve().parent.parent / "samples"
a = TVar("a")


def test_parse_core_forms():
    delta = parse_term(r"\!x. d(x) !d(x)")
    assert delta == BLam("x", App(Der(Var("x")), Bang(Der(Var("x")))))
    assert parse_term(r"proj(<\x.\y.x, \x.\y.y>)") == Proj(Pair(
        Lam("x", Lam("y", Var("x"))), Lam("x", Lam("y", Var("y")))))
    assert parse_term("λx.x") == parse_term(r"\x.x")
    assert parse_term("f a b") == App(App(Var("f"), Var("a")), Var("b"))


def test_parse_types():
    assert parse_type("!a -o a -o a") == Arrow(TBang(a), Arrow(a, a))
    assert parse_type("(a ⊸ a) & (a -o a)") == With(Arrow(a, a), Arrow(a, a))
    t = parse_type("forall b. b -o b")
    assert parse_type(show_type(t)) == t


@pytest.mark.parametrize("text, line, col", [
    (r"\x. (x", 1, 7),
    ("x )", 1, 3),
    ("\n  <x, ", 2, 7),
    (r"\x. x x", 1, 2),
])
def test_errors_carry_spans(text, line, col):
    with pytest.raises(ParseError) as e:
        parse_term(text, strict=True)
    assert (e.value.span.line, e.value.span.col) == (line, col)


def test_strict_parse_reports_linearity():
    assert parse_term(r"\x. x x") == Lam("x", App(Var("x"), Var("x")))
    with pytest.raises(ParseError, match="s-linear|once"):
        parse_term(r"\x. x x", strict=True)
    assert parse_term(r"\!x. d(x) d(x)", strict=True)


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 10 ** 6))
def test_print_parse_round_trip(seed):
    t = elaborate(random_term(random.Random(seed))[0])
    assert parse_term(print_term(t)) == t
    assert parse_term(print_term(t, unicode=True)) == t


def test_distribution_format():
    rows = format_distribution(evaluate(parse_term((SAMPLE_DIR / "coin.psta").read_text())).distribution)
    assert json.dumps(rows) == '[{"term": "\\\\x.\\\\y.x", "prob": "1/2"}, {"term": "\\\\x.\\\\y.y", "prob": "1/2"}]'
    assert parse_distribution(rows) == {r"\x.\y.x": 0.5, r"\x.\y.y": 0.5}


def _same(d, e) -> bool:
    """Structural equality; derivation nodes themselves compare by identity."""
    return (d.rule == e.rule and d.payload == e.payload and d.conclusion == e.conclusion
            and len(d.premises) == len(e.premises)
            and all(_same(p, q) for p, q in zip(d.premises, e.premises)))


@pytest.mark.parametrize("i", range(0, 500, 25))
def test_derivation_json_round_trip(i):
    d = corpus()[i]
    again = parse_derivation(json.dumps(derivation_to_json(d)))
    assert _same(again, d)
    assert check_with_paths(again) == d.conclusion


def test_sample_derivation_checks():
    d = parse_derivation((SAMPLE_DIR / "derivation.json").read_text())
    assert check_with_paths(d).subject == d.conclusion.subject


def test_non_lazy_with_intro_cites_path():
    nat_like = Arrow(TBang(a), a)
    c = derive(parse_term(r"\!x. d(x)"), {}, nat_like)
    bad = app(ax("f", Arrow(With(nat_like, nat_like), TVar("b"))), pair_intro(c, c))
    with pytest.raises(SchemaError) as e:
        check_with_paths(parse_derivation(derivation_to_json(bad)))
    assert e.value.path == "$.premises[1]" and e.value.code == "not-lazy"
    bare = proj_elim(pair_intro(ax("p", nat_like), ax("q", nat_like)))
    with pytest.raises(SchemaError) as e:
        check_with_paths(parse_derivation(derivation_to_json(bare)))
    assert e.value.path == "$" and e.value.code == "not-lazy"


def test_derivation_schema_errors():
    with pytest.raises(SchemaError) as e:
        parse_derivation({"rule": "ax", "context": [], "subject": "x"})
    assert e.value.path == "$" and "type" in e.value.msg
    with pytest.raises(SchemaError) as e:
        parse_derivation({"rule": "ax", "context": [["x", "a -o"]], "subject": "x",
                          "type": "a", "premises": []})
    assert e.value.path == "$.context[0]"
    with pytest.raises(SchemaError) as e:
        parse_derivation({"rule": "ax", "context": [], "subject": "x", "type": "a",
                          "premises": [{"rule": "ax"}]})
    assert e.value.path == "$.premises[0]"


def test_parse_ptm():
    spec = parse_ptm((SAMPLE_DIR / "copier.json").read_text())
    assert isinstance(spec, PtmSpec) and spec.state_width == 2
    d = spec.to_json()
    d["delta0"][1] = {"state": "00"}
    with pytest.raises(SchemaError) as e:
        parse_ptm(d)
    assert e.value.path == "$.delta0[1]" and e.value.code == "schema"
    d = spec.to_json()
    d["delta1"].pop()
    with pytest.raises(SchemaError) as e:
        parse_ptm(d)
    assert e.value.code == "non-total-table"
