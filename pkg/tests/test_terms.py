from __future__ import annotations

import random

from hypothesis import given, settings, strategies as st

from psta.generate import enumerate_values, random_term
from psta.sugar import elaborate
from psta.syntax import parse_term
from psta.terms import (
    Lam, Var, canonical_key, free_vars, is_s_linear, is_value, occurrences,
    s_linearity_violation, size, subterms, substitute, surface_substitute,
)


def P(text: str):
    return parse_term(text)


def test_free_vars():
    assert free_vars(P(r"\x. x y")) == {"y"}
    assert free_vars(P(r"copy^{\z.z} w as a, b in <a, b>")) == {"w"}
    assert free_vars(P("!d(x)")) == {"x"}
    assert free_vars(P(r"\!x. d(x) y")) == {"y"}


def test_sizes():
    assert size(P(r"\x.x")) == 2
    assert size(P("copy^{x} x as a, b in <a, b>")) == 6
    assert size(P(r"(\x.x) (\y.y)")) == 5
    assert size(P("proj(<x, y>)")) == 4
    assert size(P("!d(x)")) == 3


def test_s_linearity():
    assert not is_s_linear(P(r"\x. x x"))
    assert not is_s_linear(P(r"\x. !x"))
    assert is_s_linear(P(r"\!x. d(x) !d(x)"))
    err = s_linearity_violation(P(r"\y. y (\x. x x)"))
    assert err is not None and "x" in str(err)
    # copy binders are constrained too
    assert not is_s_linear(P("copy^{v} w as a, b in <a a, b>"))


def test_substitute():
    assert substitute(P(r"\y. x"), "x", Var("z")) == P(r"\y. z")
    got = substitute(P(r"\z. x"), "x", Var("z"))
    assert isinstance(got, Lam) and got.var != "z" and got.body == Var("z")
    assert substitute(P("x x"), "x", P(r"\y.y")) == P(r"(\y.y) (\y.y)")


def test_surface_substitute():
    assert surface_substitute(P("z d(d(d(x))) d(d(x))"), "x", P("!!y")) == P("z d(y) y")
    assert surface_substitute(Var("x"), "x", P(r"\y.y")) == P(r"\y.y")
    assert surface_substitute(P("<d(x), d(x)>"), "x", P(r"!(\a.\b.a)")) == P(r"<\a.\b.a, \a.\b.a>")
    # a bare occurrence blocks stripping: plain substitution
    assert surface_substitute(P("<d(x), x>"), "x", P("!y")) == P("<d(!y), !y>")


def test_is_value():
    assert is_value(P(r"\x.x"))
    assert not is_value(P(r"(\x.x) (\y.y)"))
    assert not is_value(P(r"!(\x.x)"))
    assert not is_value(P("x"))  # values are closed


def test_canonical_key():
    assert canonical_key(P(r"\x.x")) == canonical_key(P(r"\y.y"))
    assert canonical_key(P(r"\x.\y.x")) != canonical_key(P(r"\x.\y.y"))
    assert P("copy^{v} m as a, b in <a, b>") == P("copy^{v} m as c, e in <c, e>")


def test_key_separates_small_terms():
    # the enumerated values are pairwise non-alpha-equivalent by construction
    vs = enumerate_values(8)
    assert len({canonical_key(v) for v in vs}) == len(vs)


terms = st.builds(lambda seed: elaborate(random_term(random.Random(seed))[0]), st.integers(0, 10 ** 6))


@settings(max_examples=60, deadline=None)
@given(terms, st.sampled_from([P(r"\q.q"), P("w"), P(r"<\q.q, w>")]))
def test_substitution_size(m, n):
    for t in subterms(m):
        if isinstance(t, Lam):
            k = occurrences(t.body, t.var)
            assert size(substitute(t.body, t.var, n)) == size(t.body) + k * (size(n) - 1)


@settings(max_examples=60, deadline=None)
@given(terms)
def test_generated_terms_are_s_linear(m):
    assert is_s_linear(m)
