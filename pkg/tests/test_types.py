from __future__ import annotations

import pytest
from hypothesis import given, strategies as st

from psta.encodings import nat_type
from psta.ptypes import (
    Arrow, Forall, TBang, TVar, TypeError_, With, free_type_vars, is_forall_bang_lazy,
    type_size, type_substitute,
)
from psta.sugar import BOOL, UNIT, tensor_type
from psta.syntax import parse_type

a, b = TVar("a"), TVar("b")


def test_lazy_examples():
    assert is_forall_bang_lazy(UNIT)
    assert is_forall_bang_lazy(BOOL)
    assert not is_forall_bang_lazy(nat_type(1))
    assert not is_forall_bang_lazy(Arrow(BOOL, BOOL))
    assert is_forall_bang_lazy(tensor_type(BOOL, UNIT))
    assert is_forall_bang_lazy(With(BOOL, UNIT))


def test_banged_consequent_rejected():
    with pytest.raises(TypeError_):
        Arrow(a, TBang(a))
    with pytest.raises(Exception):
        parse_type("a -o !a")


def test_type_substitute():
    assert type_substitute(Arrow(a, a), "a", UNIT) == Arrow(UNIT, UNIT)
    assert type_substitute(Forall("a", a), "a", BOOL) == Forall("a", a)
    got = type_substitute(Forall("b", With(a, b)), "a", b)
    assert isinstance(got, Forall) and got.var != "b"
    assert got.body == With(b, TVar(got.var))
    assert free_type_vars(got) == {"b"}


def test_type_size():
    assert type_size(a) == 1
    assert type_size(UNIT) == 4
    assert type_size(TBang(a)) == 2
    assert type_size(BOOL) == 13


linear = st.recursive(
    st.sampled_from([a, b, UNIT]),
    lambda inner: st.one_of(
        st.builds(Arrow, inner, inner), st.builds(With, inner, inner),
        st.builds(lambda t: Forall("c", Arrow(TVar("c"), t)), inner)),
    max_leaves=6)


@given(linear)
def test_lazy_closed_under_with_and_tensor(t):
    if is_forall_bang_lazy(t):
        assert is_forall_bang_lazy(With(t, BOOL))
        assert is_forall_bang_lazy(tensor_type(t, UNIT))


def _quantifier_free(t) -> bool:
    if isinstance(t, Forall):
        return False
    if isinstance(t, (Arrow, With)):
        parts = (t.dom, t.cod) if isinstance(t, Arrow) else (t.left, t.right)
        return all(_quantifier_free(p) for p in parts)
    return not isinstance(t, TBang)


@given(linear, linear)
def test_bang_free_substitution_preserves_laziness(t, rep):
    if is_forall_bang_lazy(t) and _quantifier_free(rep):
        assert is_forall_bang_lazy(type_substitute(t, "a", rep))
