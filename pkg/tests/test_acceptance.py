"""The twelve acceptance criteria, one test each.

Every test prints a ``criterion N PASS/FAIL`` line, and the terminal summary
repeats them in order.  Run just this file with ``pytest tests/test_acceptance.py``
or ``python scripts/run_acceptance.py``.
"""

from __future__ import annotations

import itertools
import time
from fractions import Fraction

import pytest

from conftest import corpus, machine_comparison, record
from psta.builder import derive
from psta.derivations import (
    Derivation, DerivationError, Judgment, ax, check_derivation, metrics, nodes, rank, weight,
)
from psta.encodings import (
    Poly, add_term, decode_numeral, decode_tuple, delta_encode, delta_p_term, len_term, mult_term,
    numeral, poly_to_term, string_term, succ_term, tuple_term,
)
from psta.evaluation import FuelExhausted, confluence_oracle, evaluate, uniformity_check
from psta.generate import closed_normal_values, enumerate_values
from psta.machines import SAMPLES
from psta.ptm import accepts_by_majority, recognizes_with_error
from psta.ptypes import Arrow, TBang, type_size
from psta.reduction import find_redexes, first_redex
from psta.sugar import BOOL, UNIT, Ann, Tensor, elaborate, tensor_type
from psta.syntax import parse_term
from psta.terms import App, Bang, BLam, Pair, Proj, Var, apps, bangs, size, subterms, surface_substitute
from psta.transform import subject_reduce

HALF = Fraction(1, 2)
T = parse_term(r"\x.\y.x")
F = parse_term(r"\x.\y.y")
I = parse_term(r"\x.x")


def _only(t):
    (v,) = evaluate(t).distribution.support()
    return v


def _reduce_everywhere(d: Derivation, r: int, seen: dict) -> int:
    """Apply subject reduction at every surface redex of every reachable
    subject; returns the number of steps checked."""
    key = d.subject.key()
    if key in seen:
        return 0
    seen[key] = True
    n = 0
    w = weight(d, r)
    for site in find_redexes(d.subject):
        outs = subject_reduce(d, site, r)
        for o in dict.fromkeys(outs):
            check_derivation(o)
            assert weight(o, r) < w, (str(d.subject), str(site))
            n += 1 + _reduce_everywhere(o, r, seen)
    return n


def _lemma8(d: Derivation) -> None:
    m = metrics(d, (1, 2, 3, 5))
    s = d.subject.size
    assert m.weights[1] == s
    assert m.rank <= s
    for r in (2, 3, 5):
        assert m.weights[r] <= r ** m.depth * m.weights[1]


@record(1, "worked examples evaluate exactly: coin, the coin pair under a box, Ω_! diverges")
def test_criterion_01_worked_examples():
    t0 = time.perf_counter()
    coin = parse_term(r"proj(<\x.\y.x, \x.\y.y>)")
    dist = evaluate(coin).distribution
    assert dist.prob(T) == HALF and dist.prob(F) == HALF and dist.total() == 1
    fig = parse_term(r"(\!x. <proj(<\x.\y.x, \x.\y.y>), d(x)>) !(\x.x)")
    dist = evaluate(fig).distribution
    tl = parse_term(r"<\x.\y.x, \x.x>")
    fl = parse_term(r"<\x.\y.y, \x.x>")
    assert set(dist.support()) == {tl, fl}
    assert dist.prob(tl) == HALF and dist.prob(fl) == HALF
    omega = parse_term(r"(\!x. d(x) !d(x)) !(\!x. d(x) !d(x))")
    with pytest.raises(FuelExhausted):
        evaluate(omega, fuel=10 ** 4)
    assert time.perf_counter() - t0 < 1.0


@record(2, "surface substitution golden case (z d³(x) d²(x)){!²y/x} = z d(y) y")
def test_criterion_02_surface_substitution():
    t0 = time.perf_counter()
    got = surface_substitute(parse_term("z d(d(d(x))) d(d(x))"), "x", parse_term("!!y"))
    dt = time.perf_counter() - t0
    assert got == parse_term("z d(y) y")
    assert dt < 1e-3


@record(3, "confluence: 500 generated typable terms, every strategy tree gives one distribution")
def test_criterion_03_confluence():
    ds = corpus(500)
    assert len({d.subject.key() for d in ds}) == 500
    for d in ds:
        assert d.subject.size <= 30
        assert sum(isinstance(s, Proj) for s in subterms(d.subject)) <= 2
        rep = confluence_oracle(d.subject)
        assert rep.conclusive and rep.agree, str(d.subject)


@record(4, "weighted subject reduction on 200 generated derivations, to normal form")
def test_criterion_04_subject_reduction():
    steps = 0
    for d in corpus(500)[:200]:
        check_derivation(d)
        steps += _reduce_everywhere(d, rank(d), {})
    assert steps > 1000


@record(5, "weight identities w(D,1)=|M|, rk ≤ |M|, w(D,r) ≤ r^d·w(D,1) on every derivation built")
def test_criterion_05_weight_identities():
    from psta.encodings import delta_p_for
    from psta.machines import SAMPLES
    from psta.encodings import ptm_compile

    built: list[Derivation] = list(corpus(500))
    # every derivation reached by subject reduction from the first 50
    for d in corpus(500)[:50]:
        todo = [d]
        while todo:
            cur = todo.pop()
            built.append(cur)
            site = first_redex(cur.subject)
            if site is not None:
                todo.extend(dict.fromkeys(subject_reduce(cur, site)))
    for name in ("coin-writer", "copier"):
        s = SAMPLES[name]()
        built.append(ptm_compile(s.spec, s.p, s.q).derivation)
        built.append(delta_p_for(s.spec).derivation)
    built += [numeral(3).derivation, add_term(1, 1).derivation, mult_term(1, 1).derivation,
              len_term(1).derivation, poly_to_term(Poly((1, 0, 1))).derivation]
    for d in built:
        _lemma8(d)
        for n in nodes(d):
            if n.rule == "sp" or n.rule == "m":
                _lemma8(n)


def _uniformity_counterexample():
    """proj<(λx.x)I, (λx.x)I> : 𝟏.  Reducing inside both components before
    the projection costs one more step on the surviving branch than
    projecting first, so the branch depth depends on the strategy."""
    i = parse_term(r"\x.x")
    redex = App(Ann(i, Arrow(UNIT, UNIT)), Ann(i, UNIT))
    return derive(Proj(Pair(redex, redex)), {}, UNIT)


@record(6, "polystep bound |M|^(d+1) under four strategies; uniformity only without proj")
def test_criterion_06_polystep_uniformity():
    """The bound holds for every strategy.  Equal branch depth across
    strategies fails on typed terms where a projection discards a pair
    component that still had redexes; this is checked explicitly and the
    criterion is reported as a deviation rather than a pass."""
    nonuniform = 0
    for d in corpus(500):
        m = metrics(d)
        rep = uniformity_check(d.subject, d)
        assert rep.distributions_equal, str(d.subject)
        assert max(rep.depths) <= d.subject.size ** (m.depth + 1), str(d.subject)
        has_proj = any(isinstance(s, Proj) for s in subterms(d.subject))
        if not rep.equal:
            nonuniform += 1
            assert has_proj, str(d.subject)
    ce = _uniformity_counterexample()
    check_derivation(ce)
    rep = uniformity_check(ce.subject, ce)
    assert rep.depths == [2, 3, 3, 3] and rep.distributions_equal
    return "DEVIATION" if nonuniform or not rep.equal else None


@record(7, "value size ≤ type size under withI, and exactly 0̲, 1̲ enumerated at 𝐁")
def test_criterion_07_value_bound():
    checked = 0
    for d in corpus(500):
        for n in nodes(d):
            if n.rule == "withI" and n.payload == "copy":
                v = n.premises[3]
                assert size(v.subject) <= type_size(v.type)
                checked += 1
    assert checked > 0
    found = {t for t, _ in closed_normal_values(BOOL)}
    assert type_size(BOOL) == 13
    assert found == {parse_term(r"\x.\y.\f. f x y"), parse_term(r"\x.\y.\f. f y x")}
    assert {t for t, _ in closed_normal_values(UNIT)} == {I}
    assert len(enumerate_values(type_size(BOOL))) == 5646


@record(8, "arithmetic: succ, add, mult, len and poly decode to 1, 5, 6, 3, 10")
def test_criterion_08_arithmetic():
    t0 = time.perf_counter()
    got = [
        decode_numeral(_only(App(succ_term(1).term, numeral(0).term))),
        decode_numeral(_only(apps(add_term(1, 1).term, numeral(2).term, numeral(3).term))),
        decode_numeral(_only(apps(mult_term(1, 1).term, numeral(2).term, Bang(numeral(3).term)))),
        decode_numeral(_only(App(len_term(1).term, string_term("010").term))),
        decode_numeral(_only(surface_substitute(
            poly_to_term(Poly((1, 0, 1))).term, "x", bangs(numeral(3).term, 2)))),
    ]
    assert got == [1, 5, 6, 3, 10]
    assert time.perf_counter() - t0 < 30


def _tables(n: int):
    """A few total tables on n-bit states: identity-like, constant and xor."""
    states = [format(i, f"0{n}b") for i in range(2 ** n)]
    ident = {(s, b): (s, b, "R") for s in states for b in (0, 1)}
    const = {(s, b): ("0" * n, 1, "L") for s in states for b in (0, 1)}
    xor = {(s, b): (format((int(s, 2) + b) % 2 ** n, f"0{n}b"), int(s[0]) ^ b, "R" if b else "L")
           for s in states for b in (0, 1)}
    return [ident, const, xor]


def _enc(row):
    return tuple(int(c) for c in row[0]) + (row[1], 1 if row[2] == "R" else 0)


@record(9, "δ encoding brute force for n ≤ 2 and the exact ½/½ mixture of δ_P")
def test_criterion_09_delta():
    for n in (1, 2):
        tabs = _tables(n)
        encs = [delta_encode(t, n) for t in tabs]
        for tab, e in zip(tabs, encs):
            for bits in itertools.product((0, 1), repeat=n + 1):
                out = decode_tuple(_only(App(e.term, tuple_term(bits))), n + 2)
                key = ("".join(map(str, bits[:n])), bits[n])
                assert out == _enc(tab[key])
        for (t0, e0), (t1, e1) in [((tabs[0], encs[0]), (tabs[2], encs[2])), ((tabs[1], encs[1]), (tabs[1], encs[1]))]:
            dp = delta_p_term(e0.term, e1.term, n)
            for bits in itertools.product((0, 1), repeat=n + 1):
                dist = evaluate(App(dp.term, tuple_term(bits))).distribution
                key = ("".join(map(str, bits[:n])), bits[n])
                want: dict = {}
                for tab in (t0, t1):
                    want[_enc(tab[key])] = want.get(_enc(tab[key]), 0) + HALF
                got = {decode_tuple(t, n + 2): dist.prob(t) for t in dist.support()}
                assert got == want


MACHINES = ("coin-writer", "copier", "random-walk")


@pytest.mark.slow
@record(10, "compiled machines equal the oracle on every input of length ≤ 3")
def test_criterion_10_end_to_end():
    for name in MACHINES:
        for x, r in machine_comparison(name).items():
            assert r["term_tapes"] == r["oracle_tapes"], (name, x)
            assert sum(r["term_tapes"].values()) == 1


def _agree(results_a, results_b, membership) -> None:
    for eps in (Fraction(1, 4), Fraction(1, 2)):
        assert recognizes_with_error(results_a, membership, eps) == recognizes_with_error(results_b, membership, eps)
    assert accepts_by_majority(results_a, membership) == accepts_by_majority(results_b, membership)


@pytest.mark.slow
@record(11, "error-bounded and majority recognition agree between oracle and compiled verdicts")
def test_criterion_11_pp_bpp():
    outcomes = {}
    for name in MACHINES + ("biased-acceptor",):
        s = SAMPLES[name]()
        res = machine_comparison(name)
        oracle = {x: r["oracle_verdicts"] for x, r in res.items()}
        term = {x: r["term_verdicts"] for x, r in res.items()}
        assert oracle == term, name
        membership = {x: s.member(x) for x in res}
        _agree(oracle, term, membership)
        # single inputs too, so disagreement on one input cannot hide
        for x in res:
            _agree({x: oracle[x]}, {x: term[x]}, membership)
        outcomes[name] = (recognizes_with_error(term, membership, Fraction(1, 4)),
                          accepts_by_majority(term, membership))
    # the biased acceptor recognises its language with error exactly ¼
    assert outcomes["biased-acceptor"] == (True, True)
    assert not recognizes_with_error(
        {x: r["term_verdicts"] for x, r in machine_comparison("biased-acceptor").items()},
        {x: SAMPLES["biased-acceptor"]().member(x) for x in machine_comparison("biased-acceptor")},
        Fraction(1, 5))


def _node(rule, prem, ctx, subj, ty, payload=None):
    return Derivation(rule, tuple(prem), Judgment(tuple(ctx.items()), subj, ty), payload)


@record(12, "the dereliction-free STA-style derivation is rejected, the annotated one reduces")
def test_criterion_12_negative():
    a = UNIT
    aa = tensor_type(a, a)
    bang2 = TBang(TBang(a))

    def pair(v):
        return elaborate(Tensor((Var(v), Var(v))))

    bx = _node("sp", [ax("x", a)], {"x": TBang(a)}, Bang(Var("x")), TBang(a), (("x", "x"),))
    bbx = _node("sp", [bx], {"x": bang2}, Bang(Bang(Var("x"))), bang2, (("x", "x"),))
    pr = derive(Tensor((Var("y1"), Var("y2"))), {"y1": a, "y2": a}, aa)
    check_derivation(pr)
    m1 = _node("m", [pr], {"w": TBang(a)}, pair("w"), aa, (("y1", "y2"), "w"))
    m2 = _node("m", [m1], {"z": bang2}, pair("z"), aa, (("w",), "z"))
    fn = _node("impIe", [m2], {}, BLam("z", pair("z")), Arrow(bang2, aa))
    sta = _node("impE", [fn, bbx], {"x": bang2}, App(fn.subject, bbx.subject), aa)
    assert sta.subject == parse_term(r"(\!z. \f. f z z) !!x")
    with pytest.raises(DerivationError):
        check_derivation(sta)

    good = derive(parse_term(r"(\!z. d(d(z)) * d(d(z))) !(!(d(d(x))))"), {"x": bang2}, aa)
    j = check_derivation(good)
    assert j.ctx == {"x": bang2} and j.type == aa
    site = first_redex(good.subject)
    d1, d2 = subject_reduce(good, site)
    assert d1 is d2 or d1.subject == d2.subject
    check_derivation(d1)
    assert d1.subject == elaborate(parse_term("d(d(x)) * d(d(x))"))
    assert first_redex(d1.subject) is None
    assert weight(d1, rank(good)) < weight(good, rank(good))
