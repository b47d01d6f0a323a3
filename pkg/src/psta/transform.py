"""Constructive operations on derivations: renaming, generation, weighted
substitution and weighted subject reduction.

Every function returns fresh derivation trees built with the constructors
of :mod:`psta.derivations`, so conclusions are always recomputed from
premises and payloads.
"""

from __future__ import annotations

import sys
from dataclasses import dataclass

from . import derivations as D
from .derivations import Derivation, DerivationError, check_derivation, weight, nodes, rank
from .ptypes import TBang, TVar, Type, free_type_vars, fresh_tvar, type_substitute
from .reduction import RedexSite, step
from .terms import fresh_name, size

__all__ = [
    "rebuild", "rename_var", "freshen", "subst_type", "generation_peel",
    "sink_merges", "substitute_derivation", "weighted_substitute",
    "subject_reduce", "SuffixRule", "all_names",
]

_STRUCT = ("forallI", "forallE", "m")


def _deep(f, *a):
    old = sys.getrecursionlimit()
    sys.setrecursionlimit(max(old, 200000))
    try:
        return f(*a)
    finally:
        sys.setrecursionlimit(old)


# ---------------------------------------------------------------------------
# generic rebuilding


def rebuild(n: Derivation, prem) -> Derivation:
    """Re-apply the rule of ``n`` (with its payload) to new premises."""
    r = n.rule
    if r == "ax":
        return n
    if r in ("impIl", "impIe"):
        return D.lam(n.subject.var, prem[0])
    if r == "impE":
        return D.app(prem[0], prem[1])
    if r == "withI":
        return D.copy_intro(*prem) if n.payload == "copy" else D.pair_intro(*prem)
    if r == "withE":
        return D.proj_elim(prem[0])
    if r == "sp":
        ren = dict(n.payload)
        for x in prem[0].ctx:
            ren.setdefault(x, x)
        return D.sp(prem[0], {x: ren[x] for x in prem[0].ctx})
    if r == "m":
        names, x = n.payload
        return D.merge(prem[0], names, x, n.ctx[x].body)
    if r == "forallI":
        alpha, gamma = n.payload
        return D.gen(prem[0], gamma, alpha)
    if r == "forallE":
        return D.inst(prem[0], n.payload)
    raise DerivationError("shape", f"unknown rule {r!r}", r)


def all_names(d: Derivation) -> set[str]:
    out: set[str] = set()
    for n in nodes(d):
        out.update(n.ctx)
    return out


def rename_var(d: Derivation, old: str, new: str) -> Derivation:
    """Rename the free assumption ``old`` to the fresh name ``new``."""

    memo: dict[int, Derivation] = {}

    def go(n: Derivation) -> Derivation:
        if old not in n.ctx:
            return n
        got = memo.get(id(n))
        if got is not None:
            return got
        r = n.rule
        if r == "ax":
            res = D.ax(new, n.type)
        elif r == "sp":
            ren = {p: (new if q == old else q) for p, q in n.payload}
            res = D.sp(n.premises[0], ren)
        elif r == "m" and n.payload[1] == old:
            names, _ = n.payload
            res = D.merge(n.premises[0], names, new, n.ctx[old].body)
        else:
            res = rebuild(n, [go(p) for p in n.premises])
        memo[id(n)] = res
        return res

    return _deep(go, d)


def freshen(d: Derivation, avoid: set[str]) -> Derivation:
    """Alpha-rename every name bound inside ``d`` that belongs to ``avoid``."""
    if not avoid:
        return d
    avoid = set(avoid)

    def pick(x):
        y = fresh_name(x, avoid)
        avoid.add(y)
        return y

    def go(n: Derivation) -> Derivation:
        prem = [go(p) for p in n.premises]
        r = n.rule
        if r in ("impIl", "impIe"):
            b = n.subject.var
            if b in avoid:
                b2 = pick(b)
                return D.lam(b2, rename_var(prem[0], b, b2))
        elif r == "withI" and n.payload == "copy":
            dn, d1, d2, dv = prem
            (x1,) = d1.ctx
            (x2,) = d2.ctx
            if x1 in avoid:
                d1 = rename_var(d1, x1, pick(x1))
            if x2 in avoid:
                d2 = rename_var(d2, x2, pick(x2))
            return D.copy_intro(dn, d1, d2, dv)
        elif r == "m":
            names, x = n.payload
            p = prem[0]
            new_names = []
            for y in names:
                if y in avoid:
                    y2 = pick(y)
                    p = rename_var(p, y, y2)
                    y = y2
                new_names.append(y)
            return D.merge(p, new_names, x, n.ctx[x].body)
        elif r == "sp":
            p = prem[0]
            ren = {}
            for a, b in n.payload:
                if a in avoid:
                    a2 = pick(a)
                    p = rename_var(p, a, a2)
                    a = a2
                ren[a] = b
            return D.sp(p, ren)
        if all(a is b for a, b in zip(prem, n.premises)):
            return n
        return rebuild(n, prem)

    return _deep(go, d)


def subst_type(d: Derivation, gamma: str, t: Type) -> Derivation:
    """Replace the type variable ``gamma`` by ``t`` throughout ``d``."""
    tfv = free_type_vars(t)
    memo: dict[int, Derivation] = {}

    def ty(a: Type) -> Type:
        return type_substitute(a, gamma, t)

    def go(n: Derivation) -> Derivation:
        got = memo.get(id(n))
        if got is not None:
            return got
        r = n.rule
        if r == "ax":
            res = D.ax(n.subject.name, ty(n.type))
        elif r == "forallI":
            alpha, g = n.payload
            if g == gamma:
                res = n
            else:
                p = n.premises[0]
                if g in tfv:
                    g2 = fresh_tvar(g, tfv | free_type_vars(n.type) | {gamma})
                    p = subst_type(p, g, TVar(g2))
                    g = g2
                res = D.gen(go(p), g, alpha)
        elif r == "forallE":
            res = D.inst(go(n.premises[0]), ty(n.payload))
        elif r == "m":
            names, x = n.payload
            res = D.merge(go(n.premises[0]), names, x, ty(n.ctx[x].body))
        else:
            res = rebuild(n, [go(p) for p in n.premises])
        memo[id(n)] = res
        return res

    return _deep(go, d)


# ---------------------------------------------------------------------------
# generation


@dataclass(frozen=True)
class SuffixRule:
    rule: str
    payload: object
    node: Derivation

    def __str__(self):
        return self.rule


def generation_peel(d: Derivation) -> tuple[Derivation, list[SuffixRule]]:
    """Split ``d`` into the rule introducing the subject's head constructor
    and the trailing ∀I / ∀E / m rules below it (listed from the core
    outwards)."""
    suffix = []
    while d.rule in _STRUCT:
        suffix.append(SuffixRule(d.rule, d.payload, d))
        d = d.premises[0]
    suffix.reverse()
    return d, suffix


def _reapply(core: Derivation, suffix: list[SuffixRule]) -> Derivation:
    for s in suffix:
        core = rebuild(s.node, [core])
    return core


def _instantiate_core(core: Derivation, suffix: list[SuffixRule]):
    """Push the ∀I/∀E pairs of a generation suffix into the core.

    Returns the core with the matching instantiations applied and the m
    rules of the suffix, in order.  The suffix must cancel every ∀I with a
    later ∀E (it does whenever the core's type is not a quantifier and the
    final type is not one either).
    """
    stack: list[str] = []
    merges = []
    used = set(free_type_vars(core.type))
    for s in suffix:
        if s.rule == "forallI":
            _, g = s.payload
            g2 = fresh_tvar(g, used)
            used.add(g2)
            core = subst_type(core, g, TVar(g2))
            stack.append(g2)
        elif s.rule == "forallE":
            if not stack:
                raise DerivationError("shape", "∀E without a matching ∀I in a generation suffix")
            core = subst_type(core, stack.pop(), s.payload)
        else:
            merges.append(s)
    if stack:
        raise DerivationError("shape", "∀I without a matching ∀E in a generation suffix")
    return core, merges


# ---------------------------------------------------------------------------
# moving m rules towards the root


def sink_merges(d: Derivation) -> Derivation:
    """Permute m rules downwards as far as the rules allow (past ⊸E, ⊸I,
    &E, ∀I, ∀E); they stop at sp, at copy and pair introductions, and at
    the abstraction that binds the merged variable."""
    core, ms = _deep(_extract, d)
    for names, x, sigma in ms:
        core = D.merge(core, names, x, sigma)
    return core


def _extract(n: Derivation):
    r = n.rule
    if r == "m":
        names, x = n.payload
        p, ms = _extract(n.premises[0])
        return p, ms + [(tuple(names), x, n.ctx[x].body)]
    if r in ("forallI", "forallE", "withE"):
        p, ms = _extract(n.premises[0])
        return (rebuild(n, [p]) if ms else n), ms
    if r in ("impIl", "impIe"):
        p, ms = _extract(n.premises[0])
        if not ms:
            return n, []
        b = n.subject.var
        stay_out = {b}
        stay = []
        for m in reversed(ms):
            if m[1] in stay_out:
                stay.append(m)
                stay_out.update(m[0])
        stay.reverse()
        keep = [m for m in ms if m not in stay]
        for names, x, sigma in stay:
            p = D.merge(p, names, x, sigma)
        return D.lam(b, p), keep
    if r == "impE":
        p0, ms0 = _extract(n.premises[0])
        p1, ms1 = _extract(n.premises[1])
        if not ms0 and not ms1:
            return n, []
        clash = set(p0.ctx) & set(p1.ctx)
        for y in clash:
            y2 = fresh_name(y, set(p0.ctx) | set(p1.ctx))
            p1 = rename_var(p1, y, y2)
            ms1 = [(tuple(y2 if z == y else z for z in names), x, s) for names, x, s in ms1]
        return D.app(p0, p1), ms0 + ms1
    return n, []


# ---------------------------------------------------------------------------
# weighted substitution


def _intro_path(d: Derivation, x: str):
    """Path (premise indices) from the root to the node that introduces the
    assumption ``x`` (an ax, m or sp node)."""
    path = []
    n = d
    while True:
        r = n.rule
        if r == "ax":
            return path, n
        if r == "m" and n.payload[1] == x:
            return path, n
        if r == "sp":
            return path, n
        idx = [i for i, p in enumerate(n.premises) if x in p.ctx]
        if r == "withI" and n.payload == "copy":
            idx = [0]
        if len(idx) != 1:
            raise DerivationError("shape", f"cannot locate the introduction of {x}", r)
        path.append(idx[0])
        n = n.premises[idx[0]]


def _replace(d: Derivation, path, f):
    if not path:
        return f(d)
    i = path[0]
    prem = list(d.premises)
    prem[i] = _replace(prem[i], path[1:], f)
    return rebuild(d, prem)


def _peel_merges(d: Derivation):
    """Remove the trailing m rules (skipping over ∀ rules)."""
    core, suffix = generation_peel(d)
    keep = [s for s in suffix if s.rule != "m"]
    ms = [s for s in suffix if s.rule == "m"]
    return _reapply(core, keep), ms


def _reapply_merges(d: Derivation, ms) -> Derivation:
    for s in ms:
        names, x = s.payload
        d = D.merge(d, names, x, s.node.ctx[x].body)
    return d


def _linear_subst(d1: Derivation, x: str, d2: Derivation) -> Derivation:
    core2, ms = _peel_merges(sink_merges(d2))
    d1 = freshen(d1, all_names(core2) | set(core2.subject.fv))
    path, leaf = _intro_path(d1, x)
    if leaf.rule != "ax":
        raise DerivationError("shape", f"linear assumption {x} is not introduced by ax")
    if leaf.type != core2.type:
        raise DerivationError("shape", "substituted derivation has the wrong type")
    try:
        out = _replace(d1, path, lambda _: core2)
    except DerivationError as e:
        raise DerivationError(e.code, f"substitution for {x} breaks a rule: {e}", e.rule) from None
    _check_lazy_path(out, path)
    return _reapply_merges(out, ms)


def _check_lazy_path(d: Derivation, path) -> None:
    from .derivations import _check_node

    n = d
    for i in [None, *path]:
        if i is not None:
            n = n.premises[i]
        if n.rule in ("withI", "withE"):
            try:
                _check_node(n)
            except DerivationError as e:
                raise DerivationError(
                    "not-lazy",
                    "the substituted term brings a banged assumption introduced inside a box "
                    f"into a &-rule context ({e})", n.rule) from None


def _banged_subst(d1: Derivation, x: str, d2: Derivation) -> Derivation:
    spn, ms = _peel_merges(d2)
    if spn.rule != "sp":
        raise DerivationError("shape", "a derivation of a banged type must end with sp and m rules")
    (inner,) = spn.premises
    ren2 = dict(spn.payload)
    d1 = freshen(d1, all_names(d2) | set(d2.subject.fv))
    path, node = _intro_path(d1, x)

    def fresh_copy():
        c = inner
        names = {}
        for y in list(c.ctx):
            y2 = fresh_name(y, set())
            c = rename_var(c, y, y2)
            names[y] = y2
        return c, names

    if node.rule == "m":
        names, _ = node.payload
        p = node.premises[0]
        copies: dict[str, list[str]] = {y: [] for y in inner.ctx}
        for xi in names:
            c, nm = fresh_copy()
            p = substitute_derivation(p, xi, c)
            for y, y2 in nm.items():
                copies[y].append(y2)
        for y, ys in copies.items():
            p = D.merge(p, ys, ren2[y], inner.ctx[y])
        new = p
    elif node.rule == "sp":
        src = {q: a for a, q in node.payload}
        if x not in src:
            raise DerivationError("shape", f"{x} is not produced by the sp node")
        px = src[x]
        c, nm = fresh_copy()
        p = substitute_derivation(node.premises[0], px, c)
        ren = {a: q for a, q in node.payload if a != px}
        for y, y2 in nm.items():
            ren[y2] = ren2[y]
        new = D.sp(p, ren)
    else:
        raise DerivationError("shape", f"banged assumption {x} introduced by {node.rule}")
    out = _replace(d1, path, lambda _: new)
    return _reapply_merges(out, ms)


def substitute_derivation(d1: Derivation, x: str, d2: Derivation) -> Derivation:
    """``S(d1, d2)``: from ``Γ, x:σ ⊢ M : τ`` and ``Δ ⊢ N : σ`` build
    ``Γ, Δ ⊢ M{N/x} : τ``."""
    sigma = d1.ctx.get(x)
    if sigma is None:
        raise DerivationError("unbound", f"{x} is not in the context")
    if sigma != d2.type:
        raise DerivationError("shape", "argument derivation has the wrong type")
    clash = (set(d1.ctx) - {x}) & set(d2.ctx)
    if clash:
        raise DerivationError("context-split", f"contexts share {sorted(clash)}")
    if isinstance(sigma, TBang):
        return _deep(_banged_subst, d1, x, d2)
    return _deep(_linear_subst, d1, x, d2)


def weighted_substitute(d1: Derivation, x: str, d2: Derivation, r: int | None = None) -> Derivation:
    """:func:`substitute_derivation`, checked, with the weight bound
    ``w(S, r) ≤ w(d1, r) + w(d2, r)`` verified for ``r ≥ rk(d1)``."""
    r = rank(d1) if r is None else r
    if r < rank(d1):
        raise ValueError("r must be at least the rank of the first derivation")
    s = substitute_derivation(d1, x, d2)
    check_derivation(s)
    if weight(s, r) > weight(d1, r) + weight(d2, r):
        raise DerivationError("weight", "substitution increased the weight bound")
    return s


# ---------------------------------------------------------------------------
# subject reduction

_CHILD_TO_PREMISE = {
    "impIl": {0: 0}, "impIe": {0: 0}, "impE": {0: 0, 1: 1}, "withE": {0: 0},
}


def _redex_path(d: Derivation, path):
    """Premise path in ``d`` to the core node typing the subterm at ``path``."""
    out = []
    n = d
    i = 0
    while True:
        if n.rule in _STRUCT:
            out.append(0)
            n = n.premises[0]
            continue
        if i == len(path):
            return out, n
        c = path[i]
        r = n.rule
        if r == "withI" and n.payload == "copy":
            j = {1: 0, 2: 1, 3: 2}.get(c)
        elif r == "withI":
            j = c
        else:
            j = _CHILD_TO_PREMISE.get(r, {}).get(c)
        if j is None:
            raise DerivationError("shape", f"path {path} leaves the surface at rule {r}")
        out.append(j)
        n = n.premises[j]
        i += 1


def _contract(core: Derivation, kind: str, check_bound: bool = True) -> tuple[Derivation, Derivation]:
    if kind in ("beta", "bang-beta"):
        fn, arg = core.premises
        lam_core, suffix = generation_peel(fn)
        lam_core, merges = _instantiate_core(lam_core, suffix)
        body = lam_core.premises[0]
        x = lam_core.subject.var
        res = substitute_derivation(body, x, arg)
        res = _reapply_merges(res, merges)
        return res, res
    if kind == "proj":
        (pd,) = core.premises
        pair_core, suffix = generation_peel(pd)
        pair_core, merges = _instantiate_core(pair_core, suffix)
        a, b = pair_core.premises
        return _reapply_merges(a, merges), _reapply_merges(b, merges)
    if kind == "copy":
        dn, d1, d2, dv = core.premises
        v, u = core.subject.scrut, core.subject.bound
        if check_bound and size(u) < size(v):
            raise DerivationError(
                "non-canonical-copy-bound",
                f"the bound value {u} is smaller than the duplicated value {v}", "withI")
        if dn.ctx:
            dn, ms = _peel_merges(dn)
        else:
            ms = []
        (x1,) = d1.ctx
        (x2,) = d2.ctx
        left = substitute_derivation(d1, x1, dn)
        right = substitute_derivation(d2, x2, dn)
        res = _reapply_merges(D.pair_intro(left, right), ms)
        return res, res
    raise DerivationError("shape", f"unknown redex kind {kind}")


def subject_reduce(d: Derivation, site: RedexSite, r: int | None = None,
                   check: bool = True, check_bound: bool = True) -> tuple[Derivation, Derivation]:
    """Derivations for the successors of ``d.subject`` at ``site``.

    Both results type the successor terms in the same context and at the
    same type; with ``check`` they are checked and their weights at ``r``
    (default ``rk(d)``) are verified to be strictly smaller than ``w(d, r)``.
    """
    r = rank(d) if r is None else r
    succ = step(d.subject, site).successors
    dpath, core = _redex_path(d, site.path)
    new = _deep(_contract, core, site.kind, check_bound)
    outs = tuple(_deep(_replace, d, dpath, lambda _, nd=nd: nd) for nd in new)
    if len(succ) == 1:
        succ = (succ[0], succ[0])
    for o, s in zip(outs, succ):
        if o.subject != s:
            raise DerivationError("shape", f"internal: rebuilt subject {o.subject} differs from {s}")
        if o.conclusion.ctx != d.ctx or o.type != d.type:
            raise DerivationError("shape", "internal: subject reduction changed the judgment")
    if check:
        w0 = weight(d, r)
        for o in outs:
            check_derivation(o)
            if weight(o, r) >= w0:
                raise DerivationError("weight", f"weight did not decrease ({weight(o, r)} ≥ {w0})")
    return outs
