"""Exact multi-step surface reduction to distributions over surface normal forms.

Every one-step reduction counts as a binary split (a deterministic step
``M → N`` is ``M → N, N``), so ``branch_depth`` is the number of steps on the
longest path, which is the size of the evaluation derivation.
"""

from __future__ import annotations

import os
import random
import sys
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable

from .reduction import RedexSite, find_redexes, first_redex, step
from .terms import Term

__all__ = [
    "SurfaceDistribution", "EvalReport", "Strategy", "FuelExhausted",
    "LimitExceeded", "evaluate", "confluence_oracle", "uniformity_check",
    "default_fuel", "LEFTMOST", "RIGHTMOST",
]

HALF = Fraction(1, 2)


def default_fuel() -> int:
    return int(os.environ.get("PSTA_FUEL", 10**6))


class SurfaceDistribution:
    """Finite map from alpha-classes of surface normal forms to rationals."""

    __slots__ = ("mass",)

    def __init__(self, mass: dict | None = None):
        # key -> [representative, probability]
        self.mass: dict = mass if mass is not None else {}

    @classmethod
    def point(cls, t: Term) -> "SurfaceDistribution":
        return cls({t.key(): (t, Fraction(1))})

    @classmethod
    def from_pairs(cls, pairs: Iterable[tuple[Term, Fraction]]) -> "SurfaceDistribution":
        d = cls()
        for t, p in pairs:
            d.add(t, Fraction(p))
        return d

    def add(self, t: Term, p: Fraction) -> None:
        k = t.key()
        if k in self.mass:
            self.mass[k] = (self.mass[k][0], self.mass[k][1] + p)
        else:
            self.mass[k] = (t, p)

    def mix(self, other: "SurfaceDistribution") -> "SurfaceDistribution":
        """½·self + ½·other."""
        out = SurfaceDistribution({k: (t, p * HALF) for k, (t, p) in self.mass.items()})
        for t, p in other.mass.values():
            out.add(t, p * HALF)
        return out

    def total(self) -> Fraction:
        return sum((p for _, p in self.mass.values()), Fraction(0))

    def prob(self, t: Term) -> Fraction:
        e = self.mass.get(t.key())
        return e[1] if e else Fraction(0)

    def items(self) -> list[tuple[Term, Fraction]]:
        """Entries by descending probability, ties broken by printed term."""
        return sorted(((t, p) for t, p in self.mass.values()), key=lambda e: (-e[1], str(e[0])))

    def support(self) -> list[Term]:
        return [t for t, _ in self.items()]

    def map(self, f) -> dict:
        """Push forward through ``f`` (e.g. a decoder); returns a plain dict."""
        out: dict = {}
        for t, p in self.mass.values():
            v = f(t)
            out[v] = out.get(v, Fraction(0)) + p
        return out

    def frozen(self) -> frozenset:
        return frozenset((k, p) for k, (_, p) in self.mass.items())

    def __eq__(self, other):
        if not isinstance(other, SurfaceDistribution):
            return NotImplemented
        return self.frozen() == other.frozen()

    def __hash__(self):
        return hash(self.frozen())

    def __len__(self):
        return len(self.mass)

    def __repr__(self):
        body = ", ".join(f"{t}: {p}" for t, p in self.items())
        return "{" + body + "}"


@dataclass
class EvalReport:
    distribution: SurfaceDistribution
    branch_depth: int
    steps_total: int
    fuel_used: int


@dataclass(frozen=True)
class Strategy:
    """Redex selection policy: ``leftmost-outermost``, ``rightmost-innermost``,
    ``random`` (with ``seed``) or ``site-index`` (``k``-th redex, clamped)."""

    kind: str = "leftmost-outermost"
    seed: int = 0
    k: int = 0

    def __post_init__(self):
        if self.kind not in ("leftmost-outermost", "rightmost-innermost", "random", "site-index"):
            raise ValueError(f"unknown strategy {self.kind!r}")

    @classmethod
    def parse(cls, text: str) -> "Strategy":
        if text.startswith("random"):
            seed = text.partition(":")[2] or "0"
            return cls("random", seed=int(seed))
        if text.startswith("site-index"):
            return cls("site-index", k=int(text.partition(":")[2] or 0))
        return cls(_ALIASES.get(text, text))

    def __str__(self):
        if self.kind == "random":
            return f"random:{self.seed}"
        if self.kind == "site-index":
            return f"site-index:{self.k}"
        return self.kind


_ALIASES = {"leftmost": "leftmost-outermost", "rightmost": "rightmost-innermost"}
LEFTMOST = Strategy("leftmost-outermost")
RIGHTMOST = Strategy("rightmost-innermost")


class _Chooser:
    def __init__(self, strategy: Strategy):
        self.s = strategy
        self.rng = random.Random(strategy.seed)

    def __call__(self, t: Term) -> RedexSite | None:
        kind = self.s.kind
        if kind == "leftmost-outermost":
            return first_redex(t)
        sites = find_redexes(t)
        if not sites:
            return None
        if kind == "rightmost-innermost":
            return sites[-1]
        if kind == "random":
            return sites[self.rng.randrange(len(sites))]
        return sites[min(self.s.k, len(sites) - 1)]


class FuelExhausted(RuntimeError):
    """Some branch used up its fuel.  ``frontier`` holds the unfinished terms
    with their probabilities; ``partial`` holds what did finish."""

    def __init__(self, fuel: int, frontier: list[tuple[Term, Fraction]], partial: SurfaceDistribution):
        self.fuel = fuel
        self.frontier = frontier
        self.partial = partial
        super().__init__(f"fuel-exhausted: a branch exceeded {fuel} steps")


class LimitExceeded(RuntimeError):
    pass


def evaluate(term: Term, strategy: Strategy = LEFTMOST, fuel: int | None = None,
             memo: bool = False) -> EvalReport:
    """Evaluate to the unique surface distribution (when it exists).

    With ``memo`` the result of every branch point is cached on its
    alpha-class; the reported depth is then still the longest path, but
    ``steps_total`` counts only the steps actually performed.
    """
    fuel = default_fuel() if fuel is None else fuel
    if fuel <= 0:
        raise ValueError("fuel must be positive")
    choose = _Chooser(strategy)
    cache: dict = {}
    stats = {"steps": 0, "max": 0}
    frontier: list[tuple[Term, Fraction]] = []

    def run(t: Term, used: int, weight: Fraction) -> tuple[SurfaceDistribution, int] | None:
        # returns (distribution, depth of this subtree) or None when out of fuel
        start_key = t.key() if memo else None
        if memo and start_key in cache:
            return cache[start_key]
        depth = 0
        while True:
            site = choose(t)
            if site is None:
                res = (SurfaceDistribution.point(t), depth)
                break
            if used + depth >= fuel:
                stats["max"] = max(stats["max"], used + depth)
                frontier.append((t, weight))
                return None
            succ = step(t, site).successors
            stats["steps"] += 1
            depth += 1
            if len(succ) == 1:
                t = succ[0]
                continue
            a = run(succ[0], used + depth, weight * HALF)
            b = run(succ[1], used + depth, weight * HALF)
            if a is None or b is None:
                return None
            res = (a[0].mix(b[0]), depth + max(a[1], b[1]))
            break
        stats["max"] = max(stats["max"], used + res[1])
        if memo:
            cache[start_key] = res
        return res

    old = sys.getrecursionlimit()
    sys.setrecursionlimit(max(old, 100000))
    try:
        res = run(term, 0, Fraction(1))
    finally:
        sys.setrecursionlimit(old)
    if res is None:
        raise FuelExhausted(fuel, frontier, SurfaceDistribution())
    return EvalReport(res[0], res[1], stats["steps"], stats["max"])


@dataclass
class ConfluenceReport:
    agree: bool
    distributions: list[SurfaceDistribution]
    states: int
    conclusive: bool = True


def confluence_oracle(term: Term, fuel: int = 200, branch_limit: int = 20000) -> ConfluenceReport:
    """Explore every redex choice at every reachable state.

    ``fuel`` bounds path length and ``branch_limit`` bounds the number of
    distinct states visited; hitting either raises :class:`LimitExceeded`.
    """
    memo: dict = {}
    visiting: set = set()

    def outcomes(t: Term, used: int) -> frozenset:
        k = t.key()
        if k in memo:
            return memo[k]
        if used > fuel or k in visiting:
            raise LimitExceeded(f"path longer than {fuel} steps")
        if len(memo) >= branch_limit:
            raise LimitExceeded(f"more than {branch_limit} states")
        sites = find_redexes(t)
        if not sites:
            res = frozenset({frozenset({(k, Fraction(1))})})
            memo[k] = res
            reps[k] = t
            return res
        visiting.add(k)
        acc: set = set()
        for site in sites:
            succ = step(t, site).successors
            if len(succ) == 1:
                acc |= outcomes(succ[0], used + 1)
            else:
                left = outcomes(succ[0], used + 1)
                right = outcomes(succ[1], used + 1)
                for d1 in left:
                    for d2 in right:
                        acc.add(_mix_frozen(d1, d2))
        visiting.discard(k)
        res = frozenset(acc)
        memo[k] = res
        return res

    reps: dict = {}
    old = sys.getrecursionlimit()
    sys.setrecursionlimit(max(old, 100000))
    try:
        outs = outcomes(term, 0)
    finally:
        sys.setrecursionlimit(old)
    dists = [
        SurfaceDistribution({k: (reps[k], p) for k, p in d}) for d in outs
    ]
    return ConfluenceReport(len(dists) == 1, dists, len(memo))


def _mix_frozen(d1: frozenset, d2: frozenset) -> frozenset:
    acc: dict = {}
    for k, p in d1:
        acc[k] = acc.get(k, Fraction(0)) + p * HALF
    for k, p in d2:
        acc[k] = acc.get(k, Fraction(0)) + p * HALF
    return frozenset(acc.items())


@dataclass
class UniformityReport:
    depths: list[int]
    equal: bool
    distributions_equal: bool


def uniformity_check(term: Term, derivation=None, strategies: list[Strategy] | None = None,
                     fuel: int | None = None) -> UniformityReport:
    if derivation is not None:
        from .derivations import check_derivation

        check_derivation(derivation)
        if derivation.subject != term:
            raise ValueError("derivation does not type the given term")
        if fuel is None:
            from .derivations import metrics

            m = metrics(derivation)
            fuel = max(1, term.size ** (m.depth + 1))
    strategies = strategies or [
        LEFTMOST, RIGHTMOST, Strategy("random", seed=7), Strategy("site-index", k=1)
    ]
    reports = [evaluate(term, s, fuel) for s in strategies]
    depths = [r.branch_depth for r in reports]
    first = reports[0].distribution
    return UniformityReport(depths, len(set(depths)) == 1,
                            all(r.distribution == first for r in reports))
