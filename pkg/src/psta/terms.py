"""Raw terms of the probabilistic calculus with eager s-linearity checks.

Terms are immutable.  Every node caches, for each of its free variables, the
pair ``(occurrences, surface occurrences)``; an occurrence is a surface one
when it is not inside a ``!`` box, a dereliction, or the bound-value slot of a
copy.  A linear binder is s-linear exactly when its variable has the pair
``(1, 1)`` in the body.

Equality and hashing go through a nameless canonical key, so ``==`` decides
alpha-equivalence.
"""

from __future__ import annotations

import itertools
import re
from dataclasses import dataclass
from typing import Iterator

__all__ = [
    "Term", "Var", "Lam", "BLam", "App", "Bang", "Der", "Pair", "Proj", "Copy",
    "SLinearityError", "free_vars", "size", "is_s_linear", "s_linearity_violation",
    "require_s_linear", "substitute",
    "surface_substitute", "is_value", "canonical_key", "fresh_name",
    "apps", "lams", "bangs", "ders", "occurrences", "rename_free", "Sugar",
    "strip_der", "subterms", "show",
]


class SLinearityError(ValueError):
    """Raised when a linear binder is not s-linear in its scope."""

    def __init__(self, binder: str, where: str, count: int, surface: int):
        self.binder = binder
        super().__init__(
            f"binder {binder!r} of {where} is not s-linear "
            f"({count} occurrence(s), {surface} outside ! and d)"
        )


Occ = dict  # name -> (count, surface_count)


def _merge(*occs: Occ) -> Occ:
    out: dict[str, tuple[int, int]] = {}
    for occ in occs:
        for name, (c, s) in occ.items():
            if name in out:
                c0, s0 = out[name]
                out[name] = (c0 + c, s0 + s)
            else:
                out[name] = (c, s)
    return out


def _guard(occ: Occ) -> Occ:
    return {name: (c, 0) for name, (c, _) in occ.items()}


def _drop(occ: Occ, name: str) -> Occ:
    if name not in occ:
        return occ
    out = dict(occ)
    del out[name]
    return out


class Term:
    """Base class.  Subclasses are frozen dataclasses."""

    _occ: Occ
    _size: int

    # -- structural helpers shared by every constructor --------------------
    def children(self) -> tuple["Term", ...]:
        raise NotImplementedError

    def rebuild(self, children: tuple["Term", ...]) -> "Term":
        raise NotImplementedError

    def binds(self, i: int) -> tuple[str, ...]:
        """Names bound by this node in its i-th child."""
        return ()

    @property
    def occ(self) -> Occ:
        return self._occ

    @property
    def fv(self) -> frozenset[str]:
        return frozenset(self._occ)

    @property
    def size(self) -> int:
        return self._size

    def key(self):
        k = self.__dict__.get("_key")
        if k is None:
            k = _canon(self, {}, 0)
            object.__setattr__(self, "_key", k)
        return k

    def __eq__(self, other: object) -> bool:
        if self is other:
            return True
        if not isinstance(other, Term):
            return NotImplemented
        if self._size != other._size:
            return False
        return self.key() == other.key()

    def __hash__(self) -> int:
        h = self.__dict__.get("_hash")
        if h is None:
            h = hash(self.key())
            object.__setattr__(self, "_hash", h)
        return h

    def __str__(self) -> str:
        return show(self)

    def __repr__(self) -> str:
        return f"<{type(self).__name__} {show(self)}>"


def _init(t: Term, occ: Occ, sz: int) -> None:
    object.__setattr__(t, "_occ", occ)
    object.__setattr__(t, "_size", sz)


@dataclass(frozen=True, eq=False, repr=False)
class Var(Term):
    name: str

    def __post_init__(self):
        _init(self, {self.name: (1, 1)}, 1)

    def children(self):
        return ()

    def rebuild(self, children):
        return self


@dataclass(frozen=True, eq=False, repr=False)
class Lam(Term):
    """Linear abstraction ``λx.M``."""

    var: str
    body: Term

    def __post_init__(self):
        _init(self, _drop(self.body._occ, self.var), self.body._size + 1)

    def children(self):
        return (self.body,)

    def rebuild(self, children):
        return Lam(self.var, children[0])

    def binds(self, i):
        return (self.var,)


@dataclass(frozen=True, eq=False, repr=False)
class BLam(Term):
    """Bang abstraction ``λ!x.M``; no constraint on occurrences of x."""

    var: str
    body: Term

    def __post_init__(self):
        _init(self, _drop(self.body._occ, self.var), self.body._size + 1)

    def children(self):
        return (self.body,)

    def rebuild(self, children):
        return BLam(self.var, children[0])

    def binds(self, i):
        return (self.var,)


@dataclass(frozen=True, eq=False, repr=False)
class App(Term):
    fun: Term
    arg: Term

    def __post_init__(self):
        _init(self, _merge(self.fun._occ, self.arg._occ), self.fun._size + self.arg._size + 1)

    def children(self):
        return (self.fun, self.arg)

    def rebuild(self, children):
        return App(children[0], children[1])


@dataclass(frozen=True, eq=False, repr=False)
class Bang(Term):
    body: Term

    def __post_init__(self):
        _init(self, _guard(self.body._occ), self.body._size + 1)

    def children(self):
        return (self.body,)

    def rebuild(self, children):
        return Bang(children[0])


@dataclass(frozen=True, eq=False, repr=False)
class Der(Term):
    body: Term

    def __post_init__(self):
        _init(self, _guard(self.body._occ), self.body._size + 1)

    def children(self):
        return (self.body,)

    def rebuild(self, children):
        return Der(children[0])


@dataclass(frozen=True, eq=False, repr=False)
class Pair(Term):
    left: Term
    right: Term

    def __post_init__(self):
        _init(self, _merge(self.left._occ, self.right._occ), self.left._size + self.right._size + 1)

    def children(self):
        return (self.left, self.right)

    def rebuild(self, children):
        return Pair(children[0], children[1])


@dataclass(frozen=True, eq=False, repr=False)
class Proj(Term):
    body: Term

    def __post_init__(self):
        _init(self, dict(self.body._occ), self.body._size + 1)

    def children(self):
        return (self.body,)

    def rebuild(self, children):
        return Proj(children[0])


@dataclass(frozen=True, eq=False, repr=False)
class Copy(Term):
    """``copy^V M as x, y in <P, Q>``."""

    bound: Term
    scrut: Term
    x: str
    y: str
    left: Term
    right: Term

    def __post_init__(self):
        occ = _merge(
            _guard(self.bound._occ),
            self.scrut._occ,
            _drop(self.left._occ, self.x),
            _drop(self.right._occ, self.y),
        )
        sz = self.bound._size + self.scrut._size + self.left._size + self.right._size + 2
        _init(self, occ, sz)

    def children(self):
        return (self.bound, self.scrut, self.left, self.right)

    def rebuild(self, children):
        v, m, p, q = children
        return Copy(v, m, self.x, self.y, p, q)

    def binds(self, i):
        return (self.x,) if i == 2 else (self.y,) if i == 3 else ()


class Sugar(Term):
    """Base for derived forms (see :mod:`psta.sugar`).  A sugar node caches
    its one-level desugaring, whose children may themselves be sugar, and
    takes its occurrence table and size from it."""

    def desugar(self) -> Term:
        raise NotImplementedError

    def _finish(self) -> None:
        d = self.desugar()
        object.__setattr__(self, "_desugared", d)
        _init(self, d._occ, d._size)

    def show_into(self, out, prec, lam, show):
        show(self.desugar(), out, prec, lam)


# ---------------------------------------------------------------------------
# small constructors


def apps(head: Term, *args: Term) -> Term:
    for a in args:
        head = App(head, a)
    return head


def lams(names: str | list[str], body: Term) -> Term:
    """``lams("x !y z", M)`` builds ``λx.λ!y.λz.M``."""
    if isinstance(names, str):
        names = names.split()
    for n in reversed(names):
        body = BLam(n[1:], body) if n.startswith("!") else Lam(n, body)
    return body


def bangs(t: Term, k: int) -> Term:
    for _ in range(k):
        t = Bang(t)
    return t


def ders(t: Term, k: int) -> Term:
    for _ in range(k):
        t = Der(t)
    return t


# ---------------------------------------------------------------------------
# queries


def free_vars(term: Term) -> frozenset[str]:
    return term.fv


def size(term: Term) -> int:
    return term._size


def occurrences(term: Term, name: str) -> int:
    return term._occ.get(name, (0, 0))[0]


def s_linearity_violation(term: Term) -> SLinearityError | None:
    """The first binder (pre-order) that is not s-linear, as an error value."""
    stack = [term]
    while stack:
        t = stack.pop()
        if t.__dict__.get("_lin") is True:
            continue
        if isinstance(t, Lam):
            c, s = t.body._occ.get(t.var, (0, 0))
            if (c, s) != (1, 1):
                return SLinearityError(t.var, f"λ{t.var}", c, s)
        elif isinstance(t, Copy):
            for x, body in ((t.x, t.left), (t.y, t.right)):
                c, s = body._occ.get(x, (0, 0))
                if (c, s) != (1, 1):
                    return SLinearityError(x, f"copy binder {x}", c, s)
        stack.extend(reversed(t.children()))
    return None


def is_s_linear(term: Term) -> bool:
    """Membership in Λ!⊕: every λx and copy binder occurs exactly once, and
    not inside a box or a dereliction.  Raw terms outside Λ!⊕ (such as
    ``λx.λy.x``) can be built and evaluated; typing and the strict parser
    reject them."""
    lin = term.__dict__.get("_lin")
    if lin is None:
        lin = s_linearity_violation(term) is None
        object.__setattr__(term, "_lin", lin)
    return lin


def require_s_linear(term: Term) -> Term:
    err = s_linearity_violation(term)
    if err is not None:
        raise err
    return term


_counter = itertools.count(1)
_BASE = re.compile(r"^(.*?)(_?\d+)?'*$")


def fresh_name(base: str, avoid) -> str:
    stem = _BASE.match(base).group(1) or "v"
    while True:
        cand = f"{stem}_{next(_counter)}"
        if cand not in avoid:
            return cand


def substitute(term: Term, x: str, arg: Term) -> Term:
    """Capture-avoiding ``term[arg/x]``."""
    if x not in term._occ:
        return term
    return _subst(term, x, arg, arg.fv)


def _binder_case(t, var, body, x, arg, afv, mk):
    if var == x:
        return t
    if var in afv:
        new = fresh_name(var, afv | body.fv | {x})
        body = _subst(body, var, Var(new), frozenset({new}))
        var = new
    return mk(var, _subst(body, x, arg, afv))


def _subst(t: Term, x: str, arg: Term, afv: frozenset[str]) -> Term:
    if x not in t._occ:
        return t
    if isinstance(t, Var):
        return arg
    if isinstance(t, Lam):
        return _binder_case(t, t.var, t.body, x, arg, afv, Lam)
    if isinstance(t, BLam):
        return _binder_case(t, t.var, t.body, x, arg, afv, BLam)
    if isinstance(t, Copy):
        v = _subst(t.bound, x, arg, afv)
        m = _subst(t.scrut, x, arg, afv)
        bx, p = t.x, t.left
        if bx != x:
            if bx in afv:
                nb = fresh_name(bx, afv | p.fv | {x})
                p = _subst(p, bx, Var(nb), frozenset({nb}))
                bx = nb
            p = _subst(p, x, arg, afv)
        by, q = t.y, t.right
        if by != x:
            if by in afv:
                nb = fresh_name(by, afv | q.fv | {x})
                q = _subst(q, by, Var(nb), frozenset({nb}))
                by = nb
            q = _subst(q, x, arg, afv)
        return Copy(v, m, bx, by, p, q)
    kids = t.children()
    bound = [t.binds(i) for i in range(len(kids))]
    if any(afv.intersection(b) for b in bound):
        # a sugar binder would capture: fall back to its definition
        return _subst(t.desugar(), x, arg, afv)
    return t.rebuild(tuple(
        c if x in bound[i] else _subst(c, x, arg, afv) for i, c in enumerate(kids)
    ))


def rename_free(term: Term, old: str, new: str) -> Term:
    return substitute(term, old, Var(new))


def _all_under_der(t: Term, x: str, parent_is_der: bool = False) -> bool:
    if x not in t._occ:
        return True
    if isinstance(t, Var):
        return parent_is_der
    if isinstance(t, Der):
        return _all_under_der(t.body, x, True)
    return all(
        x in t.binds(i) or _all_under_der(c, x) for i, c in enumerate(t.children())
    )


def _strip_der(t: Term, x: str, y: str) -> Term:
    """Replace every free ``d(x)`` by ``y`` (y is fresh)."""
    if x not in t._occ:
        return t
    if isinstance(t, Der) and isinstance(t.body, Var) and t.body.name == x:
        return Var(y)
    kids = t.children()
    return t.rebuild(tuple(
        c if x in t.binds(i) else _strip_der(c, x, y) for i, c in enumerate(kids)
    ))


strip_der = _strip_der


def surface_substitute(term: Term, x: str, arg: Term) -> Term:
    """Surface-preserving substitution ``term{arg/x}``.

    While the argument is a box and every free occurrence of x sits directly
    under a dereliction, one ``d`` and one ``!`` are cancelled.
    """
    while isinstance(arg, Bang) and x in term._occ and _all_under_der(term, x):
        y = fresh_name(x, term.fv | arg.fv)
        term = _strip_der(term, x, y)
        x, arg = y, arg.body
    return substitute(term, x, arg)


def is_value(term: Term) -> bool:
    if term._occ:
        return False
    return _value_shape(term)


def _value_shape(t: Term) -> bool:
    if isinstance(t, Var):
        return True
    if isinstance(t, Lam):
        return _value_shape(t.body)
    if isinstance(t, App):
        return not isinstance(t.fun, Lam) and _value_shape(t.fun) and _value_shape(t.arg)
    if isinstance(t, Pair):
        return _value_shape(t.left) and _value_shape(t.right)
    return False


def canonical_key(term: Term):
    return term.key()


def _canon(t: Term, env: dict[str, int], depth: int):
    # env maps a bound name to the depth of its binder; indices are depth-relative
    if isinstance(t, Var):
        d = env.get(t.name)
        return ("v", t.name) if d is None else ("b", depth - d)
    if isinstance(t, Lam):
        return ("L", _canon(t.body, {**env, t.var: depth}, depth + 1))
    if isinstance(t, BLam):
        return ("B", _canon(t.body, {**env, t.var: depth}, depth + 1))
    if isinstance(t, App):
        return ("@", _canon(t.fun, env, depth), _canon(t.arg, env, depth))
    if isinstance(t, Bang):
        return ("!", _canon(t.body, env, depth))
    if isinstance(t, Der):
        return ("d", _canon(t.body, env, depth))
    if isinstance(t, Pair):
        return ("P", _canon(t.left, env, depth), _canon(t.right, env, depth))
    if isinstance(t, Proj):
        return ("p", _canon(t.body, env, depth))
    if isinstance(t, Sugar):
        return _canon(t.desugar(), env, depth)
    if isinstance(t, Copy):
        return (
            "c",
            _canon(t.bound, env, depth),
            _canon(t.scrut, env, depth),
            _canon(t.left, {**env, t.x: depth}, depth + 1),
            _canon(t.right, {**env, t.y: depth}, depth + 1),
        )
    raise TypeError(f"not a term: {t!r}")


def subterms(term: Term) -> Iterator[Term]:
    stack = [term]
    while stack:
        t = stack.pop()
        yield t
        stack.extend(reversed(t.children()))


# ---------------------------------------------------------------------------
# printing (ASCII surface syntax; the parser lives in psta.syntax)


def show(t: Term, unicode: bool = False) -> str:
    lam = "λ" if unicode else "\\"
    out: list[str] = []
    _show(t, out, 0, lam)
    return "".join(out)


# precedence: 0 = anywhere, 1 = function position of an application, 2 = atom
def _show(t: Term, out: list[str], prec: int, lam: str) -> None:
    if isinstance(t, Var):
        out.append(t.name)
    elif isinstance(t, (Lam, BLam)):
        if prec > 0:
            out.append("(")
        while isinstance(t, (Lam, BLam)):
            out.append(lam + ("!" if isinstance(t, BLam) else "") + t.var + ".")
            t = t.body
        _show(t, out, 0, lam)
        if prec > 0:
            out.append(")")
    elif isinstance(t, App):
        if prec > 1:
            out.append("(")
        _show(t.fun, out, 1, lam)
        out.append(" ")
        _show(t.arg, out, 2, lam)
        if prec > 1:
            out.append(")")
    elif isinstance(t, Bang):
        out.append("!")
        _show(t.body, out, 2, lam)
    elif isinstance(t, Der):
        out.append("d(")
        _show(t.body, out, 0, lam)
        out.append(")")
    elif isinstance(t, Pair):
        out.append("<")
        _show(t.left, out, 0, lam)
        out.append(", ")
        _show(t.right, out, 0, lam)
        out.append(">")
    elif isinstance(t, Proj):
        out.append("proj(")
        _show(t.body, out, 0, lam)
        out.append(")")
    elif isinstance(t, Copy):
        out.append("copy^{")
        _show(t.bound, out, 0, lam)
        out.append("} ")
        _show(t.scrut, out, 0, lam)
        out.append(f" as {t.x}, {t.y} in <")
        _show(t.left, out, 0, lam)
        out.append(", ")
        _show(t.right, out, 0, lam)
        out.append(">")
    elif isinstance(t, Sugar):
        t.show_into(out, prec, lam, _show)
    else:
        out.append(f"?{type(t).__name__}")
