from __future__ import annotations

from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from conftest import corpus
from psta.encodings import add_term, numeral
from psta.evaluation import (
    LEFTMOST, RIGHTMOST, FuelExhausted, Strategy, confluence_oracle, default_fuel, evaluate,
    uniformity_check,
)
from psta.reduction import is_snf
from psta.syntax import parse_term
from psta.terms import apps

P = parse_term
T, F, I = P(r"\x.\y.x"), P(r"\x.\y.y"), P(r"\x.x")
COIN = P(r"proj(<\x.\y.x, \x.\y.y>)")
FIG = P(r"(\!x. <proj(<\x.\y.x, \x.\y.y>), d(x)>) !(\x.x)")
OMEGA = P(r"(\!x. d(x) !d(x)) !(\!x. d(x) !d(x))")
STRATEGIES = [LEFTMOST, RIGHTMOST, Strategy("random", seed=3), Strategy("site-index", k=1)]


def test_coin():
    rep = evaluate(COIN)
    assert rep.distribution.prob(T) == Fraction(1, 2) == rep.distribution.prob(F)
    assert rep.branch_depth == 1


def test_coin_pair_under_box():
    d = evaluate(FIG).distribution
    assert d.prob(P(r"<\x.\y.x, \x.x>")) == Fraction(1, 2)
    assert d.prob(P(r"<\x.\y.y, \x.x>")) == Fraction(1, 2)


def test_omega_diverges():
    with pytest.raises(FuelExhausted) as e:
        evaluate(OMEGA, fuel=500)
    assert e.value.fuel == 500


def test_boxed_coin_is_passed_unevaluated():
    (s,) = evaluate(P(r"(\!x. <x, x>) !proj(<\x.\y.x, \x.\y.y>)")).distribution.support()
    assert s == P(r"<!proj(<\x.\y.x, \x.\y.y>), !proj(<\x.\y.x, \x.\y.y>)>")


def test_box_pair_stays_boxed():
    t = P(r"(\!x. <!d(x), !d(x)>) !proj(<\x.\y.x, \x.\y.y>)")
    (s,) = evaluate(t).distribution.support()
    assert s == P(r"<!proj(<\x.\y.x, \x.\y.y>), !proj(<\x.\y.x, \x.\y.y>)>")


def test_confluence_examples():
    assert confluence_oracle(COIN).agree
    rep = confluence_oracle(FIG)
    assert rep.agree and len(rep.distributions) == 1
    assert confluence_oracle(P(r"(\x.x) ((\y.y) (\z.z))")).agree


def test_uniformity_examples():
    assert uniformity_check(COIN).depths == [1, 1, 1, 1]
    assert set(uniformity_check(FIG).depths) == {2}
    t = apps(add_term(1, 1).term, numeral(2).term, numeral(3).term)
    rep = uniformity_check(t, strategies=[LEFTMOST, RIGHTMOST])
    assert rep.equal and rep.distributions_equal


def test_strategy_parse():
    assert Strategy.parse("random:5") == Strategy("random", seed=5)
    assert Strategy.parse("site-index:2") == Strategy("site-index", k=2)
    assert str(Strategy.parse("rightmost-innermost")) == "rightmost-innermost"
    with pytest.raises(ValueError):
        Strategy.parse("sideways")


def test_default_fuel_env(monkeypatch):
    monkeypatch.setenv("PSTA_FUEL", "1234")
    assert default_fuel() == 1234
    monkeypatch.delenv("PSTA_FUEL")
    assert default_fuel() == 10 ** 6


def test_memo_agrees(derivations):
    for d in derivations[:80]:
        assert evaluate(d.subject, memo=True).distribution == evaluate(d.subject).distribution


@settings(max_examples=80, deadline=None)
@given(st.integers(0, 499), st.sampled_from(STRATEGIES))
def test_distribution_invariants(i, strategy):
    d = corpus()[i]
    dist = evaluate(d.subject, strategy).distribution
    assert dist.total() == 1
    for t in dist.support():
        p = dist.prob(t)
        assert is_snf(t) and 0 < p <= 1
        assert p.denominator & (p.denominator - 1) == 0  # a power of two
