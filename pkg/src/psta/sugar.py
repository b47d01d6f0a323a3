"""Derived forms and the second-order encodings they rely on.

Tensors are n-ary and flat: ``σ1 ⊗ … ⊗ σn ≜ ∀β.(σ1 ⊸ … ⊸ σn ⊸ β) ⊸ β`` with
``M1 ⊗ … ⊗ Mn ≜ λf. f M1 … Mn`` and ``let M be x1 ⊗ … ⊗ xn in N ≜
M (λx1. … λxn. N)``.  The unit ``𝟏 = ∀α.α ⊸ α`` is the empty tensor, and
``let M be I in N ≜ M N``.  ``if b then P else Q ≜ π1 (b P Q)`` where ``π1``
erases the unselected branch with the eraser of the branch type.

Two further nodes, :class:`Ann` and :class:`Inst`, are hints for the
derivation builder and vanish on elaboration.
"""

from __future__ import annotations

from dataclasses import dataclass

from .ptypes import Arrow, Forall, TBang, TVar, Type, arrows, free_type_vars, fresh_tvar
from .terms import (
    App, Lam, Sugar, Term, Var, apps, fresh_name, lams,
)

__all__ = [
    "Tensor", "LetTensor", "LetUnit", "Unit", "If", "Ann", "Inst", "elaborate",
    "tensor_type", "tensor_components", "UNIT", "BOOL", "ZERO", "ONE", "ID",
    "bool_value", "eraser", "inhabitant", "pi1", "compose", "is_bool_type",
]


# ---------------------------------------------------------------------------
# types


def tensor_type(*comps: Type) -> Type:
    avoid = set()
    for c in comps:
        avoid |= free_type_vars(c)
    b = "b" if "b" not in avoid else fresh_tvar("b", avoid)
    return Forall(b, Arrow(arrows(*comps, TVar(b)), TVar(b)))


def tensor_components(t: Type) -> tuple[Type, ...] | None:
    """Inverse of :func:`tensor_type`; None when ``t`` has another shape."""
    if not isinstance(t, Forall) or not isinstance(t.body, Arrow):
        return None
    b = t.var
    if t.body.cod != TVar(b):
        return None
    f = t.body.dom
    comps = []
    while isinstance(f, Arrow):
        comps.append(f.dom)
        f = f.cod
    if f != TVar(b) or any(b in free_type_vars(c) for c in comps):
        return None
    return tuple(comps)


UNIT = Forall("a", Arrow(TVar("a"), TVar("a")))
BOOL = Forall("a", arrows(TVar("a"), TVar("a"), tensor_type(TVar("a"), TVar("a"))))


def is_bool_type(t: Type) -> bool:
    return t == BOOL


# ---------------------------------------------------------------------------
# sugar nodes


@dataclass(frozen=True, eq=False, repr=False)
class Tensor(Sugar):
    items: tuple[Term, ...]

    def __post_init__(self):
        object.__setattr__(self, "items", tuple(self.items))
        self._finish()

    def desugar(self):
        d = self.__dict__.get("_desugared")
        if d is not None:
            return d
        avoid = set()
        for i in self.items:
            avoid |= i.fv
        f = "f" if "f" not in avoid else fresh_name("f", avoid)
        return Lam(f, apps(Var(f), *self.items))

    def children(self):
        return self.items

    def rebuild(self, children):
        return Tensor(tuple(children))

    def show_into(self, out, prec, lam, show):
        if not self.items:
            out.append("I")
            return
        if prec > 0:
            out.append("(")
        for i, it in enumerate(self.items):
            if i:
                out.append(" * ")
            show(it, out, 1, lam)
        if prec > 0:
            out.append(")")


@dataclass(frozen=True, eq=False, repr=False)
class LetTensor(Sugar):
    """``let scrut be x1 * … * xn in body``; a name written ``!x`` is bound
    with a bang abstraction."""

    scrut: Term
    names: tuple[str, ...]
    body: Term

    def __post_init__(self):
        object.__setattr__(self, "names", tuple(self.names))
        self._finish()

    def desugar(self):
        d = self.__dict__.get("_desugared")
        if d is not None:
            return d
        return App(self.scrut, lams(list(self.names), self.body))

    @property
    def plain_names(self) -> tuple[str, ...]:
        return tuple(n.lstrip("!") for n in self.names)

    def children(self):
        return (self.scrut, self.body)

    def rebuild(self, children):
        return LetTensor(children[0], self.names, children[1])

    def binds(self, i):
        return self.plain_names if i == 1 else ()

    def show_into(self, out, prec, lam, show):
        if prec > 0:
            out.append("(")
        out.append("let ")
        show(self.scrut, out, 0, lam)
        out.append(" be " + " * ".join(self.names) + " in ")
        show(self.body, out, 0, lam)
        if prec > 0:
            out.append(")")


@dataclass(frozen=True, eq=False, repr=False)
class LetUnit(Sugar):
    """``let scrut be I in body``."""

    scrut: Term
    body: Term

    def __post_init__(self):
        self._finish()

    def desugar(self):
        d = self.__dict__.get("_desugared")
        # the annotation lets the builder instantiate 𝟏 at the body's type
        return d if d is not None else App(Ann(self.scrut, UNIT), self.body)

    def children(self):
        return (self.scrut, self.body)

    def rebuild(self, children):
        return LetUnit(children[0], children[1])

    def show_into(self, out, prec, lam, show):
        if prec > 0:
            out.append("(")
        out.append("let ")
        show(self.scrut, out, 0, lam)
        out.append(" be I in ")
        show(self.body, out, 0, lam)
        if prec > 0:
            out.append(")")


@dataclass(frozen=True, eq=False, repr=False)
class Unit(Sugar):
    def __post_init__(self):
        self._finish()

    def desugar(self):
        return Lam("x", Var("x"))

    def children(self):
        return ()

    def rebuild(self, children):
        return self

    def show_into(self, out, prec, lam, show):
        out.append("I")


@dataclass(frozen=True, eq=False, repr=False)
class If(Sugar):
    """``if cond then a else b`` at branch type ``typ`` (default 𝐁)."""

    cond: Term
    then: Term
    orelse: Term
    typ: Type | None = None

    def __post_init__(self):
        self._finish()

    def desugar(self):
        d = self.__dict__.get("_desugared")
        if d is not None:
            return d
        t = self.typ or BOOL
        head = Ann(pi1(t), Arrow(tensor_type(t, t), t))
        return App(head, apps(self.cond, self.then, self.orelse))

    def children(self):
        return (self.cond, self.then, self.orelse)

    def rebuild(self, children):
        return If(children[0], children[1], children[2], self.typ)

    def show_into(self, out, prec, lam, show):
        if prec > 0:
            out.append("(")
        out.append("if ")
        show(self.cond, out, 0, lam)
        out.append(" then ")
        show(self.then, out, 0, lam)
        out.append(" else ")
        show(self.orelse, out, 0, lam)
        if prec > 0:
            out.append(")")


@dataclass(frozen=True, eq=False, repr=False)
class Ann(Sugar):
    """Builder hint: check ``body`` against ``typ``."""

    body: Term
    typ: Type

    def __post_init__(self):
        self._finish()

    def desugar(self):
        return self.body

    def children(self):
        return (self.body,)

    def rebuild(self, children):
        return Ann(children[0], self.typ)


@dataclass(frozen=True, eq=False, repr=False)
class Inst(Sugar):
    """Builder hint: instantiate the leading quantifiers of ``body``."""

    body: Term
    types: tuple[Type, ...]

    def __post_init__(self):
        object.__setattr__(self, "types", tuple(self.types))
        self._finish()

    def desugar(self):
        return self.body

    def children(self):
        return (self.body,)

    def rebuild(self, children):
        return Inst(children[0], self.types)


def elaborate(t: Term) -> Term:
    """Replace every derived form by its definition."""
    if isinstance(t, Sugar):
        return elaborate(t.desugar())
    if not _has_sugar(t):
        return t
    return t.rebuild(tuple(elaborate(c) for c in t.children()))


def _has_sugar(t: Term) -> bool:
    h = t.__dict__.get("_has_sugar")
    if h is None:
        h = isinstance(t, Sugar) or any(_has_sugar(c) for c in t.children())
        object.__setattr__(t, "_has_sugar", h)
    return h


# ---------------------------------------------------------------------------
# closed terms used by the derived forms

ID = Lam("x", Var("x"))


def bool_value(b: int) -> Term:
    """``0̲ = λx.λy. x ⊗ y`` and ``1̲ = λx.λy. y ⊗ x`` (elaborated)."""
    xy = ("x", "y") if b == 0 else ("y", "x")
    return lams("x y f", apps(Var("f"), Var(xy[0]), Var(xy[1])))


ZERO = bool_value(0)
ONE = bool_value(1)


def compose(m: Term, n: Term) -> Term:
    """``M ∘ N ≜ λz. M (N z)``."""
    z = fresh_name("z", m.fv | n.fv)
    return Lam(z, App(m, App(n, Var(z))))


def inhabitant(t: Type) -> Term:
    """A closed value of the closed type ``t`` (booleans, tensors, unit and
    the numeral and string types built in :mod:`psta.encodings`)."""
    if t == UNIT:
        return ID
    if t == BOOL:
        return ZERO
    comps = tensor_components(t)
    if comps is not None:
        return elaborate(Tensor(tuple(inhabitant(c) for c in comps)))
    raise ValueError(f"no canonical inhabitant for {t}")


def eraser(t: Type) -> Term:
    """A closed ``E_t : t ⊸ 𝟏`` (sugared).  Defined for booleans, tensors
    and unit, and for ``A ⊸ R`` when ``A`` has a canonical inhabitant and
    ``R`` has an eraser."""
    if t == UNIT:
        return Lam("z", Var("z"))
    if t == BOOL:
        # λz. let z I I be x ⊗ y in (let y be I in x)
        return Lam("z", LetTensor(apps(Var("z"), Unit(), Unit()), ("x", "y"), LetUnit(Var("y"), Var("x"))))
    comps = tensor_components(t)
    if comps is not None:
        names = tuple(f"x{i}" for i in range(len(comps)))
        body: Term = App(eraser(comps[-1]), Var(names[-1]))
        for c, n in reversed(list(zip(comps[:-1], names[:-1]))):
            body = LetUnit(App(eraser(c), Var(n)), body)
        return Lam("z", LetTensor(Var("z"), names, body))
    if isinstance(t, Arrow) and not isinstance(t.dom, TBang):
        return Lam("f", App(eraser(t.cod), App(Var("f"), inhabitant(t.dom))))
    raise ValueError(f"no eraser for {t}")


def pi1(t: Type) -> Term:
    """``π1 ≜ λz. let z be x ⊗ y in (let E y be I in x)`` at branch type t."""
    return Lam("z", LetTensor(Var("z"), ("x", "y"), LetUnit(App(eraser(t), Var("y")), Var("x"))))
