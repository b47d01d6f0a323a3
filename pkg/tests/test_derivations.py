from __future__ import annotations

import pytest
from hypothesis import given, settings, strategies as st

from conftest import corpus
from psta.builder import derive
from psta.derivations import (
    DerivationError, Judgment, Derivation, app, ax, check_derivation, merge, metrics,
    nodes, pair_intro, proj_elim, rank, sp, weight,
)
from psta.encodings import bool_term, delta_encode, delta_p_term
from psta.ptypes import Arrow, TBang, TVar, With
from psta.reduction import RedexSite, find_redexes
from psta.sugar import BOOL, UNIT, Ann, tensor_type
from psta.syntax import parse_term
from psta.terms import App, Bang, BLam, Der, Pair, Proj, Var
from psta.transform import generation_peel, subject_reduce, weighted_substitute

P = parse_term
a = TVar("a")
I = P(r"\x.x")


def _id_derivation():
    return derive(I, {}, UNIT)


def test_single_axiom_metrics():
    m = metrics(ax("x", a), (1, 2, 7))
    assert (m.rank, m.depth) == (1, 0)
    assert m.weights == {1: 1, 2: 1, 7: 1}


def test_wrong_axiom_rejected():
    bad = Derivation("ax", (), Judgment((("x", a),), Var("y"), a))
    with pytest.raises(DerivationError):
        check_derivation(bad)


def test_linear_binder_used_twice_rejected():
    d = ax("x", a)
    body = Derivation("impE", (d, d), Judgment((("x", a),), App(Var("x"), Var("x")), a))
    with pytest.raises(DerivationError):
        check_derivation(body)


def test_sp_and_m_rewrite_subjects():
    d = sp(ax("x", a))
    assert d.subject == Bang(Der(Var("x")))
    check_derivation(d)
    both = app(ax("f", Arrow(a, a)), ax("y", a))
    m = merge(both, [], "z", UNIT)
    assert m.ctx["z"] == TBang(UNIT)
    check_derivation(m)


def test_context_split_is_disjoint():
    with pytest.raises(DerivationError):
        app(ax("x", Arrow(a, a)), ax("x", a))


def test_with_intro_needs_lazy_types():
    nat_like = Arrow(TBang(a), a)
    d = pair_intro(ax("p", nat_like), ax("q", nat_like))
    with pytest.raises(DerivationError):
        check_derivation(proj_elim(d))


def test_booleans_check():
    for b in (0, 1):
        e = bool_term(b)
        assert check_derivation(e.derivation).type == BOOL


def test_delta_p_shape_and_bound():
    tab = {(s, b): (s, b, "R") for s in ("0", "1") for b in (0, 1)}
    d0 = delta_encode(tab, 1)
    dp = delta_p_term(d0.term, d0.term, 1)
    j = check_derivation(dp.derivation)
    assert j.type == Arrow(tensor_type(BOOL, BOOL), tensor_type(BOOL, BOOL, BOOL))
    core, suffix = generation_peel(dp.derivation)
    assert core.rule == "impIl"
    m = metrics(dp.derivation, (1, 3))
    assert m.weights[1] == dp.term.size
    assert m.weights[3] <= 3 ** m.depth * m.weights[1]
    assert any(n.rule == "withI" and n.payload == "copy" for n in nodes(dp.derivation))


def test_generation_peel_strips_merges():
    core, suffix = generation_peel(merge(ax("x", a), [], "w", UNIT))
    assert core.rule == "ax" and [s.rule for s in suffix] == ["m"]


def test_weighted_substitute_linear():
    d1 = ax("x", UNIT)
    d2 = _id_derivation()
    s = weighted_substitute(d1, "x", d2)
    assert s.subject == I and weight(s, 1) == 2 <= 1 + 2


def test_weighted_substitute_banged_two_uses():
    # x : !(1 ⊸ 1) used twice, substituted by a box
    t = P(r"d(x) (d(x) (\y.y))")
    f = Arrow(UNIT, UNIT)
    d1 = derive(t, {"x": TBang(f)}, UNIT)
    assert rank(d1) == 2
    d2 = derive(Bang(Ann(P(r"\z.z"), f)), {}, TBang(f))
    for r in (2, 3):
        s = weighted_substitute(d1, "x", d2, r)
        assert s.subject == P(r"(\z.z) ((\z.z) (\y.y))")
        assert weight(s, r) <= weight(d1, r) + weight(d2, r)


def test_weighted_substitute_into_copy():
    t = P(r"copy^{\v.v} x as a, b in <a, b>")
    d1 = derive(t, {"x": UNIT}, With(UNIT, UNIT))
    s = weighted_substitute(d1, "x", _id_derivation())
    check_derivation(s)
    assert weight(s, 1) <= weight(d1, 1) + 2


def test_subject_reduce_root_beta():
    t = App(Ann(I, Arrow(UNIT, UNIT)), Ann(P(r"\y.y"), UNIT))
    d = derive(t, {}, UNIT)
    d1, d2 = subject_reduce(d, RedexSite((), "beta"), 1)
    assert d1.subject == d2.subject == P(r"\y.y")
    assert (weight(d, 1), weight(d1, 1)) == (5, 2)


def test_subject_reduce_proj_two_derivations():
    zero, one = bool_term(0), bool_term(1)
    d = proj_elim(pair_intro(zero.derivation, one.derivation))
    check_derivation(d)
    d1, d2 = subject_reduce(d, RedexSite((), "proj"))
    assert (d1.subject, d2.subject) == (zero.term, one.term)
    assert d1.type == d2.type == BOOL


def test_chain_strictly_decreases():
    # (λ!x. d(x) proj<I, I>) !I : bang-beta, then proj, then beta
    f = Arrow(UNIT, UNIT)
    body = App(Der(Var("x")), Ann(Proj(Pair(I, I)), UNIT))
    d = derive(App(BLam("x", body), Bang(Ann(I, f))), {}, UNIT)
    r = rank(d)
    chain = [d]
    while find_redexes(chain[-1].subject):
        site = find_redexes(chain[-1].subject)[0]
        chain.append(subject_reduce(chain[-1], site, r)[0])
    ws = [weight(x, r) for x in chain]
    assert len(ws) == 4 and all(x > y for x, y in zip(ws, ws[1:]))


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 499))
def test_lemma8_on_corpus(i):
    d = corpus()[i]
    m = metrics(d, (1, 2, 3))
    assert m.weights[1] == d.subject.size
    assert m.rank <= d.subject.size
    assert m.weights[3] <= 3 ** m.depth * m.weights[1]


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 499))
def test_banged_conclusion_has_banged_context(i):
    for n in nodes(corpus()[i]):
        if isinstance(n.type, TBang):
            assert all(isinstance(t, TBang) for t in n.ctx.values())
            assert isinstance(n.subject, Bang)
