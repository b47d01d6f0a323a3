"""Random typable terms together with their derivations.

Terms are drawn over the closed types 𝟏, 𝐁, 𝟏 ⊸ 𝟏 and 𝐁 ⊸ 𝐁 and mix
β-, !-β-, projection and copy redexes.  Boxes, copy scrutinees and
projected pairs are generated closed; this keeps every generated term
inside the fragment where weighted subject reduction is known to hold
(see the ``not-lazy`` error of :mod:`psta.transform`).
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from functools import lru_cache

from .builder import BuildError, derive
from .derivations import Derivation, DerivationError, check_derivation
from .ptypes import Arrow, TBang, Type
from .sugar import BOOL, ID, ONE, UNIT, ZERO, Ann, LetUnit, elaborate, eraser
from .terms import App, Bang, BLam, Copy, Der, Lam, Pair, Proj, Term, Var, lams, apps

__all__ = [
    "GenConfig", "TYPES", "random_term", "random_derivation", "derivation_corpus",
    "enumerate_values", "closed_normal_values",
]

UU = Arrow(UNIT, UNIT)
BB = Arrow(BOOL, BOOL)
TYPES: tuple[Type, ...] = (UNIT, BOOL, UU, BB)
LAZY = (UNIT, BOOL)

NOT = lams("b x y", apps(Var("b"), Var("y"), Var("x")))


@dataclass
class GenConfig:
    max_size: int = 30
    max_proj: int = 2
    depth: int = 3
    # relative weights of the constructions
    weights: dict[str, float] = field(default_factory=lambda: {
        "val": 2.0, "der": 2.0, "beta": 3.0, "bbeta": 2.5, "proj": 1.0, "copy": 1.5})


class _Gen:
    def __init__(self, rng: random.Random, cfg: GenConfig):
        self.rng = rng
        self.cfg = cfg
        self.proj_left = cfg.max_proj
        self.n = 0

    def fresh(self, stem: str) -> str:
        self.n += 1
        return f"{stem}{self.n}"

    def value(self, t: Type) -> Term:
        if t == UNIT or t == UU:
            return ID
        if t == BOOL:
            return self.rng.choice((ZERO, ONE))
        return self.rng.choice((ID, NOT))

    def closed(self, t: Type, depth: int, bangs: dict[str, Type]) -> Term:
        """A term of type ``t`` whose free variables are banged names from
        ``bangs`` used under dereliction."""
        opts = {"val": 1.0}
        w = self.cfg.weights
        if depth > 0:
            opts = dict(w)
            if not any(s == t for s in bangs.values()):
                opts.pop("der")
            if self.proj_left <= 0 or t not in LAZY:
                opts.pop("proj")
                opts.pop("copy")
        elif any(s == t for s in bangs.values()):
            opts["der"] = w["der"]
        kind = self.rng.choices(list(opts), weights=list(opts.values()))[0]
        if kind == "val":
            return self.value(t)
        if kind == "der":
            return Der(Var(self.rng.choice([y for y, s in bangs.items() if s == t])))
        if kind == "beta":
            s = self.rng.choice(TYPES)
            x = self.fresh("x")
            body = self.open(x, s, t, depth - 1, bangs)
            arg = self.closed(s, depth - 1, bangs)
            return App(Ann(Lam(x, body), Arrow(s, t)), Ann(arg, s))
        if kind == "bbeta":
            s = self.rng.choice(TYPES)
            y = self.fresh("y")
            body = self.closed(t, depth - 1, {**bangs, y: s})
            arg = Bang(self.closed(s, depth - 1, {}))
            return App(Ann(BLam(y, body), Arrow(TBang(s), t)), arg)
        if kind == "proj":
            self.proj_left -= 1
            return Proj(Pair(self.closed(t, depth - 1, {}), self.closed(t, depth - 1, {})))
        if kind == "copy":
            self.proj_left -= 1
            s = UNIT if self.rng.random() < 0.8 else BOOL
            scrut = self.closed(s, depth - 1, {})
            a, b = self.fresh("a"), self.fresh("b")
            return Proj(Ann(Copy(ZERO if s == BOOL else ID, Ann(scrut, s), a, b,
                                 self.open(a, s, t, depth - 1, {}),
                                 self.open(b, s, t, depth - 1, {})), _with(t)))
        raise AssertionError(kind)

    def open(self, x: str, s: Type, t: Type, depth: int, bangs: dict[str, Type]) -> Term:
        """A term of type ``t`` using the linear variable ``x : s`` once."""
        if depth <= 0 or self.rng.random() < 0.4:
            return self.route(Var(x), s, t, depth, bangs)
        mid = self.rng.choice(TYPES)
        z = self.fresh("z")
        inner = self.open(x, s, mid, depth - 1, bangs)
        outer = self.open(z, mid, t, depth - 1, bangs)
        return App(Ann(Lam(z, outer), Arrow(mid, t)), inner)

    def route(self, m: Term, s: Type, t: Type, depth: int, bangs: dict[str, Type]) -> Term:
        """Turn ``m : s`` into a term of type ``t`` by eliminations."""
        if s == t:
            return m
        if s == UNIT:
            return LetUnit(m, Ann(self.closed(t, depth - 1, bangs), t))
        if s == BOOL:
            return self.route(App(Ann(eraser(BOOL), Arrow(BOOL, UNIT)), m), UNIT, t, depth, bangs)
        arg = self.closed(s.dom, depth - 1, bangs) if depth > 0 else self.value(s.dom)
        return self.route(App(m, Ann(arg, s.dom)), s.cod, t, depth, bangs)


def _with(t: Type) -> Type:
    from .ptypes import With

    return With(t, t)


def random_term(rng: random.Random, cfg: GenConfig | None = None, ty: Type | None = None) -> tuple[Term, Type]:
    """A random (sugared) term and its intended type."""
    cfg = cfg or GenConfig()
    g = _Gen(rng, cfg)
    t = ty or rng.choice(TYPES)
    return g.closed(t, cfg.depth, {}), t


def random_derivation(rng: random.Random, cfg: GenConfig | None = None, tries: int = 200) -> Derivation:
    """A derivation of ``⊢ M : A`` for a random ``M`` with ``|M|`` at most
    ``cfg.max_size`` and at most ``cfg.max_proj`` projection sites."""
    cfg = cfg or GenConfig()
    for _ in range(tries):
        term, ty = random_term(rng, cfg)
        core = elaborate(term)
        if core.size > cfg.max_size:
            continue
        try:
            d = derive(term, {}, ty)
            check_derivation(d)
            return d
        except (BuildError, DerivationError):
            continue
    raise RuntimeError("no derivation found within the size bound")


def derivation_corpus(n: int, seed: int = 0, cfg: GenConfig | None = None, distinct: bool = True) -> list[Derivation]:
    """``n`` random derivations (distinct subjects up to alpha by default)."""
    rng = random.Random(seed)
    out: list[Derivation] = []
    seen = set()
    attempts = 0
    while len(out) < n:
        attempts += 1
        if attempts > 100 * n:
            raise RuntimeError(f"only {len(out)} distinct derivations found")
        d = random_derivation(rng, cfg)
        k = d.subject.key()
        if distinct and k in seen:
            continue
        seen.add(k)
        out.append(d)
    return out


# bounded enumeration of values


def enumerate_values(max_size: int) -> list[Term]:
    """All closed terms of the value grammar (variables, abstractions,
    applications with a non-abstraction head, pairs) of size at most
    ``max_size`` in which every binder occurs exactly once, as the
    abstraction rule requires.  Binders are named by depth, so the list has
    no alpha duplicates."""
    return [t for n in range(1, max_size + 1) for t, used in _values(n, 0, frozenset()) if not used]


@lru_cache(maxsize=None)
def _values(n: int, depth: int, avail: frozenset[int]) -> tuple[tuple[Term, frozenset[int]], ...]:
    """Values of size exactly ``n`` whose free variables come from ``avail``
    (each used at most once), paired with the variables they use."""
    out: list[tuple[Term, frozenset[int]]] = []
    if n == 1:
        return tuple((Var(f"x{i}"), frozenset({i})) for i in sorted(avail))
    for body, used in _values(n - 1, depth + 1, avail | {depth}):
        if depth in used:
            out.append((Lam(f"x{depth}", body), used - {depth}))
    for k in range(1, n - 1):
        for left, u1 in _values(k, depth, avail):
            for right, u2 in _values(n - 1 - k, depth, avail - u1):
                out.append((Pair(left, right), u1 | u2))
                if not isinstance(left, Lam):
                    out.append((App(left, right), u1 | u2))
    return tuple(out)


def closed_normal_values(ty: Type, max_size: int | None = None) -> list[tuple[Term, Derivation]]:
    """The enumerated values of size at most ``max_size`` (default: the size
    of ``ty``) that have a checked derivation at ``ty``."""
    from .ptypes import type_size

    bound = type_size(ty) if max_size is None else max_size
    out = []
    for t in enumerate_values(bound):
        try:
            d = derive(t, {}, ty)
            check_derivation(d)
        except (BuildError, DerivationError):
            continue
        out.append((t, d))
    return out
