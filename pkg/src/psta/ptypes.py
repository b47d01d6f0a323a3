"""Types: exponential types ``σ ::= A | !σ`` over linear types
``A ::= α | σ ⊸ A | A & A | ∀α.A``.

Tensor and unit are not primitive; :mod:`psta.encodings` builds them as
second-order types.  Equality of types is alpha-equivalence.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

__all__ = [
    "Type", "TVar", "Arrow", "With", "Forall", "TBang", "TypeError_",
    "is_linear", "is_forall_bang_lazy", "type_substitute", "type_size",
    "free_type_vars", "tbangs", "strip_bangs", "bang_depth", "arrows",
    "check_well_formed", "show_type",
]


class TypeError_(ValueError):
    """Malformed type (a banged consequent, for instance)."""


class Type:
    def tkey(self):
        k = self.__dict__.get("_key")
        if k is None:
            k = _tkey(self, {}, 0)
            object.__setattr__(self, "_key", k)
        return k

    def __eq__(self, other):
        if self is other:
            return True
        if not isinstance(other, Type):
            return NotImplemented
        return self.tkey() == other.tkey()

    def __hash__(self):
        return hash(self.tkey())

    def __str__(self):
        return show_type(self)

    def __repr__(self):
        return f"<{type(self).__name__} {show_type(self)}>"


@dataclass(frozen=True, eq=False, repr=False)
class TVar(Type):
    name: str


@dataclass(frozen=True, eq=False, repr=False)
class Arrow(Type):
    dom: Type
    cod: Type

    def __post_init__(self):
        if isinstance(self.cod, TBang):
            raise TypeError_(f"banged consequent in {show_type(self.dom)} ⊸ {show_type(self.cod)}")


@dataclass(frozen=True, eq=False, repr=False)
class With(Type):
    left: Type
    right: Type

    def __post_init__(self):
        if isinstance(self.left, TBang) or isinstance(self.right, TBang):
            raise TypeError_("& takes linear types only")


@dataclass(frozen=True, eq=False, repr=False)
class Forall(Type):
    var: str
    body: Type

    def __post_init__(self):
        if isinstance(self.body, TBang):
            raise TypeError_("∀ takes a linear body")


@dataclass(frozen=True, eq=False, repr=False)
class TBang(Type):
    body: Type


def _tkey(t: Type, env: dict[str, int], depth: int):
    if isinstance(t, TVar):
        d = env.get(t.name)
        return ("v", t.name) if d is None else ("b", depth - d)
    if isinstance(t, Arrow):
        return ("->", _tkey(t.dom, env, depth), _tkey(t.cod, env, depth))
    if isinstance(t, With):
        return ("&", _tkey(t.left, env, depth), _tkey(t.right, env, depth))
    if isinstance(t, Forall):
        return ("A", _tkey(t.body, {**env, t.var: depth}, depth + 1))
    if isinstance(t, TBang):
        return ("!", _tkey(t.body, env, depth))
    # metavariables and other extensions provide their own key
    return t.tkey_leaf()


def is_linear(t: Type) -> bool:
    return not isinstance(t, TBang)


def check_well_formed(t: Type) -> Type:
    """Constructors already reject bad shapes; this re-walks foreign trees."""
    if isinstance(t, Arrow):
        check_well_formed(t.dom)
        check_well_formed(t.cod)
        if isinstance(t.cod, TBang):
            raise TypeError_("banged consequent")
    elif isinstance(t, With):
        check_well_formed(t.left)
        check_well_formed(t.right)
    elif isinstance(t, (Forall, TBang)):
        check_well_formed(t.body)
    return t


def is_forall_bang_lazy(t: Type, positive: bool = True) -> bool:
    if isinstance(t, TVar):
        return True
    if isinstance(t, TBang):
        return False
    if isinstance(t, Arrow):
        return is_forall_bang_lazy(t.dom, not positive) and is_forall_bang_lazy(t.cod, positive)
    if isinstance(t, With):
        return is_forall_bang_lazy(t.left, positive) and is_forall_bang_lazy(t.right, positive)
    if isinstance(t, Forall):
        return positive and is_forall_bang_lazy(t.body, positive)
    return False


def free_type_vars(t: Type) -> frozenset[str]:
    if isinstance(t, TVar):
        return frozenset({t.name})
    if isinstance(t, Arrow):
        return free_type_vars(t.dom) | free_type_vars(t.cod)
    if isinstance(t, With):
        return free_type_vars(t.left) | free_type_vars(t.right)
    if isinstance(t, Forall):
        return free_type_vars(t.body) - {t.var}
    if isinstance(t, TBang):
        return free_type_vars(t.body)
    return frozenset()


_tcounter = itertools.count(1)


def fresh_tvar(base: str, avoid) -> str:
    stem = base.rstrip("0123456789_'") or "a"
    while True:
        cand = f"{stem}{next(_tcounter)}"
        if cand not in avoid:
            return cand


def type_substitute(t: Type, var: str, rep: Type) -> Type:
    """Capture-avoiding ``t⟨rep/var⟩``."""
    return _tsub(t, var, rep, free_type_vars(rep))


def _tsub(t: Type, var: str, rep: Type, rfv: frozenset[str]) -> Type:
    if isinstance(t, TVar):
        return rep if t.name == var else t
    if isinstance(t, Arrow):
        return Arrow(_tsub(t.dom, var, rep, rfv), _tsub(t.cod, var, rep, rfv))
    if isinstance(t, With):
        return With(_tsub(t.left, var, rep, rfv), _tsub(t.right, var, rep, rfv))
    if isinstance(t, TBang):
        return TBang(_tsub(t.body, var, rep, rfv))
    if isinstance(t, Forall):
        if t.var == var or var not in free_type_vars(t.body):
            return t
        v, body = t.var, t.body
        if v in rfv:
            nv = fresh_tvar(v, rfv | free_type_vars(body) | {var})
            body = _tsub(body, v, TVar(nv), frozenset({nv}))
            v = nv
        return Forall(v, _tsub(body, var, rep, rfv))
    return t.tsub(var, rep, rfv)


def type_size(t: Type) -> int:
    if isinstance(t, TVar):
        return 1
    if isinstance(t, (Arrow, With)):
        a, b = (t.dom, t.cod) if isinstance(t, Arrow) else (t.left, t.right)
        return type_size(a) + type_size(b) + 1
    if isinstance(t, (Forall, TBang)):
        return type_size(t.body) + 1
    return 1


def tbangs(t: Type, k: int) -> Type:
    for _ in range(k):
        t = TBang(t)
    return t


def bang_depth(t: Type) -> int:
    k = 0
    while isinstance(t, TBang):
        t, k = t.body, k + 1
    return k


def strip_bangs(t: Type, k: int | None = None) -> Type:
    n = 0
    while isinstance(t, TBang) and (k is None or n < k):
        t, n = t.body, n + 1
    if k is not None and n < k:
        raise TypeError_(f"expected {k} bangs on {show_type(t)}")
    return t


def arrows(*ts: Type) -> Type:
    """``arrows(a, b, c)`` is ``a ⊸ b ⊸ c``."""
    out = ts[-1]
    for t in reversed(ts[:-1]):
        out = Arrow(t, out)
    return out


def show_type(t: Type, unicode: bool = True) -> str:
    arrow, bang, forall = (" ⊸ ", "!", "∀") if unicode else (" -o ", "!", "forall ")
    return _show(t, 0, arrow, bang, forall)


def _show(t, prec, arrow, bang, forall):
    if isinstance(t, TVar):
        return t.name
    if isinstance(t, TBang):
        return bang + _show(t.body, 3, arrow, bang, forall)
    if isinstance(t, Arrow):
        s = _show(t.dom, 1, arrow, bang, forall) + arrow + _show(t.cod, 0, arrow, bang, forall)
        return f"({s})" if prec > 0 else s
    if isinstance(t, With):
        s = _show(t.left, 2, arrow, bang, forall) + " & " + _show(t.right, 2, arrow, bang, forall)
        return f"({s})" if prec > 1 else s
    if isinstance(t, Forall):
        s = f"{forall}{t.var}. " + _show(t.body, 0, arrow, bang, forall)
        return f"({s})" if prec > 0 else s
    return t.show_leaf()
