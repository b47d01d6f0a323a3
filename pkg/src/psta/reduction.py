"""One-step surface reduction.

Redexes are found only through surface contexts: under both kinds of
abstraction, on either side of an application or pair, inside ``d``, ``proj``,
the copy scrutinee and the two copy branches.  Never under ``!`` and never in
the bound-value slot of a copy.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Literal

from .terms import (
    App, Bang, BLam, Copy, Lam, Pair, Proj, Term, is_value, substitute,
    surface_substitute, is_s_linear,
)

__all__ = [
    "RedexSite", "StepResult", "ReductionError", "find_redexes", "step",
    "is_snf", "subterm_at", "replace_at", "SURFACE_CHILDREN",
]

Kind = Literal["beta", "bang-beta", "proj", "copy"]


class ReductionError(ValueError):
    def __init__(self, code: str, msg: str):
        self.code = code
        super().__init__(f"{code}: {msg}")


@dataclass(frozen=True)
class RedexSite:
    path: tuple[int, ...]
    kind: Kind

    def __str__(self) -> str:
        where = "root" if not self.path else ".".join(map(str, self.path))
        return f"{self.kind}@{where}"


@dataclass(frozen=True)
class StepResult:
    successors: tuple[Term, ...]

    @property
    def branching(self) -> bool:
        return len(self.successors) == 2


def _surface_children(t: Term) -> tuple[int, ...]:
    if isinstance(t, Bang):
        return ()
    if isinstance(t, Copy):
        return (1, 2, 3)
    return tuple(range(len(t.children())))


SURFACE_CHILDREN = _surface_children


def redex_kind(t: Term) -> Kind | None:
    if isinstance(t, App):
        if isinstance(t.fun, Lam):
            return "beta"
        if isinstance(t.fun, BLam) and isinstance(t.arg, Bang):
            return "bang-beta"
    elif isinstance(t, Proj):
        if isinstance(t.body, Pair):
            return "proj"
    elif isinstance(t, Copy):
        if is_value(t.scrut) and is_value(t.bound):
            return "copy"
    return None


def find_redexes(term: Term) -> list[RedexSite]:
    out: list[RedexSite] = []
    stack: list[tuple[Term, tuple[int, ...]]] = [(term, ())]
    while stack:
        t, path = stack.pop()
        k = redex_kind(t)
        if k is not None:
            out.append(RedexSite(path, k))
        kids = t.children()
        for i in reversed(_surface_children(t)):
            stack.append((kids[i], path + (i,)))
    return out


def first_redex(term: Term) -> RedexSite | None:
    """Leftmost-outermost redex without building the full list."""
    stack: list[tuple[Term, tuple[int, ...]]] = [(term, ())]
    while stack:
        t, path = stack.pop()
        k = redex_kind(t)
        if k is not None:
            return RedexSite(path, k)
        kids = t.children()
        for i in reversed(_surface_children(t)):
            stack.append((kids[i], path + (i,)))
    return None


def is_snf(term: Term) -> bool:
    return first_redex(term) is None


def subterm_at(term: Term, path: tuple[int, ...]) -> Term:
    for i in path:
        term = term.children()[i]
    return term


def replace_at(term: Term, path: tuple[int, ...], new: Term) -> Term:
    if not path:
        return new
    kids = list(term.children())
    kids[path[0]] = replace_at(kids[path[0]], path[1:], new)
    return term.rebuild(tuple(kids))


def contract(redex: Term) -> tuple[Term, ...]:
    if isinstance(redex, App) and isinstance(redex.fun, Lam):
        return (substitute(redex.fun.body, redex.fun.var, redex.arg),)
    if isinstance(redex, App) and isinstance(redex.fun, BLam) and isinstance(redex.arg, Bang):
        return (surface_substitute(redex.fun.body, redex.fun.var, redex.arg),)
    if isinstance(redex, Proj) and isinstance(redex.body, Pair):
        return (redex.body.left, redex.body.right)
    if isinstance(redex, Copy):
        if not (is_value(redex.scrut) and is_value(redex.bound)):
            raise ReductionError("copy-not-ready", "copy fires only on a value scrutinee and value bound")
        v = redex.scrut
        return (Pair(substitute(redex.left, redex.x, v), substitute(redex.right, redex.y, v)),)
    raise ReductionError("invalid-site", f"no redex at {redex}")


def step(term: Term, site: RedexSite, check: bool = False) -> StepResult:
    try:
        redex = subterm_at(term, site.path)
    except IndexError:
        raise ReductionError("invalid-site", f"path {site.path} does not exist") from None
    if isinstance(redex, Copy) and site.kind == "copy" and redex_kind(redex) is None:
        raise ReductionError("copy-not-ready", "copy fires only on a value scrutinee and value bound")
    if redex_kind(redex) != site.kind or not _is_surface_path(term, site.path):
        raise ReductionError("invalid-site", f"{site} is not a redex of {term}")
    succ = tuple(replace_at(term, site.path, r) for r in contract(redex))
    if check and is_s_linear(term):
        for s in succ:
            assert is_s_linear(s), s
    return StepResult(succ)


def _is_surface_path(term: Term, path: tuple[int, ...]) -> bool:
    for i in path:
        if i not in _surface_children(term):
            return False
        term = term.children()[i]
    return True
