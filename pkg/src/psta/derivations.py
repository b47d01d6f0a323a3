"""Explicit typing derivations: nodes, a local rule checker, and metrics.

A derivation is a tree of :class:`Derivation` nodes, each storing its rule
tag, premises, conclusion and a payload.  Payloads make every rule
syntax-directed for the checker:

==========  ===============================================================
rule        payload
==========  ===============================================================
ax          ``None``
impIl/Ie    ``None`` (the binder is read off the subject)
impE        ``None``
withI       ``"copy"`` (premises N, M1, M2, V) or ``"pair"`` (premises M1, M2)
withE       ``None``
sp          tuple of ``(premise name, conclusion name)``
m           ``(merged names, new name)``; the new name's type comes from
            the conclusion context, so ``n = 0`` needs no extra data
forallI     ``(alpha, gamma)``: premise type is ``A<gamma/alpha>``
forallE     the instantiating type ``B``
==========  ===============================================================

Ranks count free *occurrences* of the merged or promoted variables, so that
``w(D, 1) = |M|`` holds node by node.
"""

from __future__ import annotations

import sys
from dataclasses import dataclass, field
from functools import cached_property
from typing import Any, Iterator

from .ptypes import (
    Arrow, Forall, TBang, Type, With, free_type_vars, is_forall_bang_lazy,
    show_type, type_substitute,
)
from .terms import (
    App, BLam, Bang, Copy, Der, Lam, Pair, Proj, Term, Var, fresh_name,
    is_value, occurrences, substitute,
)

__all__ = [
    "Judgment", "Derivation", "DerivationError", "Metrics", "RULES",
    "check_derivation", "metrics", "weight", "rank", "depth",
    "ax", "lam", "app", "copy_intro", "pair_intro", "proj_elim", "sp",
    "merge", "gen", "inst", "simul_subst", "nodes",
]

RULES = ("ax", "impIl", "impIe", "impE", "withI", "withE", "sp", "m", "forallI", "forallE")


class DerivationError(ValueError):
    def __init__(self, code: str, msg: str, rule: str | None = None):
        self.code = code
        self.rule = rule
        where = f" [{rule}]" if rule else ""
        super().__init__(f"{code}{where}: {msg}")


@dataclass(frozen=True, eq=False)
class Judgment:
    context: tuple[tuple[str, Type], ...]
    subject: Term
    type: Type

    @cached_property
    def ctx(self) -> dict[str, Type]:
        return dict(self.context)

    def __eq__(self, other):
        if not isinstance(other, Judgment):
            return NotImplemented
        return self.ctx == other.ctx and self.subject == other.subject and self.type == other.type

    def __hash__(self):
        return hash((frozenset(self.ctx.items()), self.subject, self.type))

    def __str__(self):
        ctx = ", ".join(f"{x}: {show_type(t)}" for x, t in self.context)
        return f"{ctx} ⊢ {self.subject} : {show_type(self.type)}"


def _ctx(d: dict[str, Type]) -> tuple[tuple[str, Type], ...]:
    return tuple(d.items())


@dataclass(frozen=True, eq=False)
class Derivation:
    rule: str
    premises: tuple["Derivation", ...]
    conclusion: Judgment
    payload: Any = None

    @property
    def subject(self) -> Term:
        return self.conclusion.subject

    @property
    def type(self) -> Type:
        return self.conclusion.type

    @property
    def ctx(self) -> dict[str, Type]:
        return self.conclusion.ctx

    def __str__(self):
        return f"{self.rule}: {self.conclusion}"


def nodes(d: Derivation) -> Iterator[Derivation]:
    stack = [d]
    while stack:
        n = stack.pop()
        yield n
        stack.extend(n.premises)


def simul_subst(m: Term, mapping: dict[str, Term]) -> Term:
    """Simultaneous capture-avoiding substitution."""
    if not mapping:
        return m
    avoid = set(m.fv)
    for t in mapping.values():
        avoid |= t.fv
    temps = {}
    for x in mapping:
        tmp = fresh_name("t", avoid | set(mapping))
        avoid.add(tmp)
        temps[x] = tmp
        m = substitute(m, x, Var(tmp))
    for x, tmp in temps.items():
        m = substitute(m, tmp, mapping[x])
    return m


# ---------------------------------------------------------------------------
# constructors that compute conclusions


def ax(x: str, a: Type) -> Derivation:
    return Derivation("ax", (), Judgment(((x, a),), Var(x), a))


def lam(x: str, d: Derivation) -> Derivation:
    ctx = dict(d.ctx)
    if x not in ctx:
        raise DerivationError("unbound", f"{x} not in the premise context", "lam")
    a = ctx.pop(x)
    if isinstance(a, TBang):
        return Derivation("impIe", (d,), Judgment(_ctx(ctx), BLam(x, d.subject), Arrow(a, d.type)))
    return Derivation("impIl", (d,), Judgment(_ctx(ctx), Lam(x, d.subject), Arrow(a, d.type)))


def app(d1: Derivation, d2: Derivation) -> Derivation:
    t = d1.type
    if not isinstance(t, Arrow):
        raise DerivationError("shape", f"function type expected, got {show_type(t)}", "impE")
    clash = set(d1.ctx) & set(d2.ctx)
    if clash:
        raise DerivationError("context-split", f"shared names {sorted(clash)}", "impE")
    ctx = {**d1.ctx, **d2.ctx}
    return Derivation("impE", (d1, d2), Judgment(_ctx(ctx), App(d1.subject, d2.subject), t.cod))


def copy_intro(dn: Derivation, d1: Derivation, d2: Derivation, dv: Derivation) -> Derivation:
    (x1,) = d1.ctx
    (x2,) = d2.ctx
    subj = Copy(dv.subject, dn.subject, x1, x2, d1.subject, d2.subject)
    return Derivation("withI", (dn, d1, d2, dv), Judgment(_ctx(dn.ctx), subj, With(d1.type, d2.type)), "copy")


def pair_intro(d1: Derivation, d2: Derivation) -> Derivation:
    subj = Pair(d1.subject, d2.subject)
    return Derivation("withI", (d1, d2), Judgment((), subj, With(d1.type, d2.type)), "pair")


def proj_elim(d: Derivation) -> Derivation:
    t = d.type
    if not isinstance(t, With):
        raise DerivationError("shape", "& type expected", "withE")
    return Derivation("withE", (d,), Judgment(_ctx(d.ctx), Proj(d.subject), t.left))


def sp(d: Derivation, renaming: dict[str, str] | None = None) -> Derivation:
    renaming = dict(renaming or {})
    for x in d.ctx:
        renaming.setdefault(x, x)
    if len(set(renaming.values())) != len(renaming):
        raise DerivationError("shape", "sp renaming is not injective", "sp")
    ctx = {renaming[x]: TBang(t) for x, t in d.ctx.items()}
    body = simul_subst(d.subject, {x: Der(Var(y)) for x, y in renaming.items()})
    payload = tuple((x, renaming[x]) for x in d.ctx)
    return Derivation("sp", (d,), Judgment(_ctx(ctx), Bang(body), TBang(d.type)), payload)


def merge(d: Derivation, names, x: str, sigma: Type | None = None) -> Derivation:
    names = tuple(names)
    ctx = dict(d.ctx)
    if names:
        sigma = ctx[names[0]]
    if sigma is None:
        raise DerivationError("shape", "m with n = 0 needs the type", "m")
    for n in names:
        if ctx.pop(n) != sigma:
            raise DerivationError("shape", "merged assumptions differ in type", "m")
    if x in ctx:
        raise DerivationError("shape", f"{x} already in context", "m")
    ctx[x] = TBang(sigma)
    subj = simul_subst(d.subject, {n: Der(Var(x)) for n in names})
    return Derivation("m", (d,), Judgment(_ctx(ctx), subj, d.type), (names, x))


def gen(d: Derivation, gamma: str, alpha: str | None = None) -> Derivation:
    """∀I generalising the type variable ``gamma`` (renamed to ``alpha``)."""
    from .ptypes import TVar

    alpha = alpha or gamma
    body = d.type if alpha == gamma else type_substitute(d.type, gamma, TVar(alpha))
    return Derivation("forallI", (d,), Judgment(d.conclusion.context, d.subject, Forall(alpha, body)), (alpha, gamma))


def inst(d: Derivation, b: Type) -> Derivation:
    t = d.type
    if not isinstance(t, Forall):
        raise DerivationError("shape", f"∀ type expected, got {show_type(t)}", "forallE")
    return Derivation("forallE", (d,), Judgment(d.conclusion.context, d.subject, type_substitute(t.body, t.var, b)), b)


# ---------------------------------------------------------------------------
# checking


def check_derivation(d: Derivation) -> Judgment:
    """Validate every node; return the conclusion or raise DerivationError."""
    old = sys.getrecursionlimit()
    sys.setrecursionlimit(max(old, 200000))
    try:
        seen: set[int] = set()
        stack = [d]
        while stack:
            n = stack.pop()
            if id(n) in seen:
                continue
            seen.add(id(n))
            _check_node(n)
            stack.extend(n.premises)
    finally:
        sys.setrecursionlimit(old)
    return d.conclusion


def _fail(code, msg, rule):
    raise DerivationError(code, msg, rule)


def _nprem(d: Derivation, k: int):
    if len(d.premises) != k:
        _fail("shape", f"expected {k} premise(s), got {len(d.premises)}", d.rule)


def _lazy_ctx(ctx: dict[str, Type]) -> bool:
    return all(is_forall_bang_lazy(t) for t in ctx.values())


def _check_node(d: Derivation) -> None:
    r, c = d.rule, d.conclusion
    ctx, subj, ty = c.ctx, c.subject, c.type
    if len(ctx) != len(c.context):
        _fail("shape", "context names are not distinct", r)
    if r == "ax":
        _nprem(d, 0)
        if not isinstance(subj, Var) or list(ctx) != [subj.name]:
            _fail("shape", "ax must be x: A ⊢ x: A", r)
        if ctx[subj.name] != ty or isinstance(ty, TBang):
            _fail("side-condition", "ax needs the same linear type on both sides", r)
    elif r in ("impIl", "impIe"):
        _nprem(d, 1)
        p = d.premises[0].conclusion
        want = Lam if r == "impIl" else BLam
        if not isinstance(subj, want) or not isinstance(ty, Arrow):
            _fail("shape", "abstraction with an implication type expected", r)
        x = subj.var
        if x in ctx or x not in p.ctx:
            _fail("shape", f"binder {x} must move from the premise context", r)
        a = p.ctx[x]
        if (r == "impIl") == isinstance(a, TBang):
            _fail("side-condition", "⊸Il needs a linear antecedent, ⊸Ie a banged one", r)
        if a != ty.dom or p.type != ty.cod or p.subject != subj.body:
            _fail("shape", "premise does not match", r)
        rest = dict(p.ctx)
        del rest[x]
        if rest != ctx:
            _fail("shape", "context mismatch", r)
        if r == "impIl" and subj.body.occ.get(x) != (1, 1):
            _fail("not-s-linear", f"{x} is not s-linear in the body", r)
    elif r == "impE":
        _nprem(d, 2)
        p1, p2 = (q.conclusion for q in d.premises)
        if not isinstance(subj, App) or p1.subject != subj.fun or p2.subject != subj.arg:
            _fail("shape", "subject is not the application of the premises", r)
        if not isinstance(p1.type, Arrow) or p1.type.dom != p2.type or p1.type.cod != ty:
            _fail("shape", "types do not compose", r)
        if set(p1.ctx) & set(p2.ctx) or {**p1.ctx, **p2.ctx} != ctx:
            _fail("context-split", "contexts must be a disjoint split of the conclusion", r)
    elif r == "withI" and d.payload == "pair":
        _nprem(d, 2)
        p1, p2 = (q.conclusion for q in d.premises)
        if ctx or p1.ctx or p2.ctx:
            _fail("side-condition", "bare pair needs closed components", r)
        if not isinstance(subj, Pair) or p1.subject != subj.left or p2.subject != subj.right:
            _fail("shape", "subject mismatch", r)
        if ty != With(p1.type, p2.type):
            _fail("shape", "type mismatch", r)
        if not (is_forall_bang_lazy(p1.type) and is_forall_bang_lazy(p2.type)):
            _fail("not-lazy", "pair components need ∀!-lazy types", r)
    elif r == "withI":
        _nprem(d, 4)
        pn, p1, p2, pv = (q.conclusion for q in d.premises)
        if not isinstance(subj, Copy):
            _fail("shape", "copy subject expected", r)
        cty = pn.type
        if pn.ctx != ctx or pn.subject != subj.scrut:
            _fail("shape", "scrutinee premise mismatch", r)
        if p1.ctx != {subj.x: cty} or p1.subject != subj.left:
            _fail("shape", "left branch premise mismatch", r)
        if p2.ctx != {subj.y: cty} or p2.subject != subj.right:
            _fail("shape", "right branch premise mismatch", r)
        if pv.ctx or pv.subject != subj.bound or pv.type != cty:
            _fail("shape", "value premise mismatch", r)
        if subj.left.occ.get(subj.x) != (1, 1) or subj.right.occ.get(subj.y) != (1, 1):
            _fail("not-s-linear", "copy binders must be s-linear in their branches", r)
        if not is_value(subj.bound):
            _fail("non-value", f"{subj.bound} is not a value", r)
        if ty != With(p1.type, p2.type):
            _fail("shape", "type mismatch", r)
        for t in (cty, p1.type, p2.type):
            if not is_forall_bang_lazy(t):
                _fail("not-lazy", f"{show_type(t)} is not ∀!-lazy", r)
        if not _lazy_ctx(ctx):
            _fail("not-lazy", "context is not ∀!-lazy", r)
    elif r == "withE":
        _nprem(d, 1)
        p = d.premises[0].conclusion
        if not isinstance(subj, Proj) or p.subject != subj.body or p.ctx != ctx:
            _fail("shape", "premise mismatch", r)
        if not isinstance(p.type, With) or p.type.left != p.type.right or p.type.left != ty:
            _fail("shape", "premise must have type C & C", r)
        if not is_forall_bang_lazy(ty):
            _fail("not-lazy", f"{show_type(ty)} is not ∀!-lazy", r)
        if not _lazy_ctx(ctx):
            _fail("not-lazy", "context is not ∀!-lazy", r)
    elif r == "sp":
        _nprem(d, 1)
        p = d.premises[0].conclusion
        ren = dict(d.payload or ())
        if set(ren) != set(p.ctx) or len(set(ren.values())) != len(ren):
            _fail("shape", "renaming must be a bijection on the premise context", r)
        want_ctx = {ren[x]: TBang(t) for x, t in p.ctx.items()}
        if want_ctx != ctx:
            _fail("side-condition", "conclusion context must be the banged premise context", r)
        if ty != TBang(p.type):
            _fail("shape", "conclusion type must be !τ", r)
        want = Bang(simul_subst(p.subject, {x: Der(Var(y)) for x, y in ren.items()}))
        if want != subj:
            _fail("shape", f"subject must be {want}", r)
    elif r == "m":
        _nprem(d, 1)
        p = d.premises[0].conclusion
        try:
            names, x = d.payload
        except (TypeError, ValueError):
            _fail("shape", "m payload must be (names, new name)", r)
        names = tuple(names)
        if len(set(names)) != len(names) or any(n not in p.ctx for n in names):
            _fail("shape", "merged names must be distinct premise assumptions", r)
        bx = ctx.get(x)
        if not isinstance(bx, TBang):
            _fail("side-condition", "merged variable must have a banged type", r)
        for n in names:
            if p.ctx[n] != bx.body:
                _fail("side-condition", "merged assumptions must share the type σ", r)
        rest = {k: v for k, v in p.ctx.items() if k not in names}
        if x in rest or {**rest, x: bx} != ctx:
            _fail("shape", "context mismatch", r)
        if p.type != ty:
            _fail("shape", "type mismatch", r)
        if simul_subst(p.subject, {n: Der(Var(x)) for n in names}) != subj:
            _fail("shape", "subject must be M[d(x)/x_i]", r)
    elif r == "forallI":
        _nprem(d, 1)
        p = d.premises[0].conclusion
        alpha, gamma = d.payload
        if not isinstance(ty, Forall) or p.ctx != ctx or p.subject != subj:
            _fail("shape", "premise mismatch", r)
        from .ptypes import TVar

        if type_substitute(ty.body, ty.var, TVar(gamma)) != p.type:
            _fail("shape", "premise type must be A<γ/α>", r)
        if any(gamma in free_type_vars(t) for t in ctx.values()):
            _fail("side-condition", f"{gamma} is free in the context", r)
        if gamma != ty.var and gamma in free_type_vars(ty):
            _fail("side-condition", f"{gamma} is free in the conclusion", r)
    elif r == "forallE":
        _nprem(d, 1)
        p = d.premises[0].conclusion
        b = d.payload
        if not isinstance(p.type, Forall) or p.ctx != ctx or p.subject != subj:
            _fail("shape", "premise mismatch", r)
        if not isinstance(b, Type) or isinstance(b, TBang):
            _fail("side-condition", "∀E instantiates with a linear type", r)
        if type_substitute(p.type.body, p.type.var, b) != ty:
            _fail("shape", "conclusion must be A<B/α>", r)
    else:
        _fail("shape", f"unknown rule {r!r}", r)


# ---------------------------------------------------------------------------
# metrics


def node_rank(d: Derivation) -> int:
    """m-rank or sp-rank of a node (free occurrences of the variables)."""
    if d.rule == "m":
        names, _ = d.payload
        s = d.premises[0].subject
        return sum(occurrences(s, n) for n in names)
    if d.rule == "sp":
        s = d.premises[0].subject
        return sum(occurrences(s, x) for x, _ in d.payload)
    return 0


@dataclass(frozen=True)
class Metrics:
    rank: int
    depth: int
    weights: dict = field(default_factory=dict)

    def weight(self, r: int) -> int:
        return self.weights[r]


def rank(d: Derivation) -> int:
    k = 0
    for n in nodes(d):
        if n.rule == "m":
            k = max(k, node_rank(n))
    return max(1, k)


def depth(d: Derivation) -> int:
    memo: dict[int, int] = {}

    def go(n):
        v = memo.get(id(n))
        if v is None:
            v = max((go(p) for p in n.premises), default=0) + (n.rule == "sp")
            memo[id(n)] = v
        return v

    return _deep(go, d)


def weight(d: Derivation, r: int) -> int:
    memo: dict[int, int] = {}

    def go(n):
        v = memo.get(id(n))
        if v is not None:
            return v
        ws = [go(p) for p in n.premises]
        rule = n.rule
        if rule == "ax":
            v = 1
        elif rule in ("impIl", "impIe", "withE"):
            v = ws[0] + 1
        elif rule == "impE":
            v = ws[0] + ws[1] + 1
        elif rule == "withI":
            v = sum(ws) + (2 if n.payload == "copy" else 1)
        elif rule in ("forallI", "forallE"):
            v = ws[0]
        elif rule == "sp":
            v = r * (ws[0] + node_rank(n)) + 1
        elif rule == "m":
            v = ws[0] + node_rank(n)
        else:
            raise DerivationError("shape", f"unknown rule {rule!r}")
        memo[id(n)] = v
        return v

    return _deep(go, d)


def _deep(f, d):
    old = sys.getrecursionlimit()
    sys.setrecursionlimit(max(old, 200000))
    try:
        return f(d)
    finally:
        sys.setrecursionlimit(old)


def metrics(d: Derivation, rs=(1,)) -> Metrics:
    if isinstance(rs, int):
        rs = (rs,)
    return Metrics(rank(d), depth(d), {r: weight(d, r) for r in rs})
