"""Bidirectional construction of derivations for (possibly sugared) terms.

``derive(term, ctx, ty)`` returns a derivation whose subject is the
elaborated term.  Applications are typed along their spine: quantifiers of
the head are opened with metavariables, solved by first-order unification
against the expected result and against synthesized arguments, and then
replaced by explicit ``∀E`` steps.  The checker itself never unifies.

Structural rules are placed where the term dictates them:

* a banged variable shared by several children of an application spine is
  renamed apart in each child (``d(x)`` becomes ``x_i``) and the copies are
  merged with ``m`` afterwards;
* a box ``!N`` strips one dereliction from each of its free variables and
  closes with ``sp``;
* a dereliction ``d(x)`` outside a box is an ``m`` over a single name;
* an unused ``λ!x`` binder is introduced by ``m`` over no names.
"""

from __future__ import annotations

import itertools
import sys

from . import derivations as D
from .derivations import Derivation, DerivationError
from .ptypes import (
    Arrow, Forall, TBang, TVar, Type, With, free_type_vars, fresh_tvar,
    show_type, type_substitute,
)
from .sugar import UNIT, Ann, Inst, Unit
from .terms import (
    App, BLam, Bang, Copy, Der, Lam, Pair, Proj, Sugar, Term, Var,
    fresh_name, strip_der,
)
from .terms import _all_under_der

__all__ = ["BuildError", "derive", "check", "synth"]


class BuildError(DerivationError):
    def __init__(self, msg: str):
        super().__init__("build", msg)


# ---------------------------------------------------------------------------
# unification over metavariables (type variables named ``?k``)

_meta_ids = itertools.count(1)
_rigid_ids = itertools.count(1)


def _is_meta(t: Type) -> bool:
    return isinstance(t, TVar) and t.name.startswith("?")


def _names(t: Type, prefix: str) -> set[str]:
    return {v for v in free_type_vars(t) if v.startswith(prefix)}


class Solver:
    def __init__(self):
        self.sol: dict[str, Type] = {}

    def fresh(self) -> str:
        return f"?{next(_meta_ids)}"

    def zonk(self, t: Type) -> Type:
        metas = _names(t, "?")
        while metas & self.sol.keys():
            for m in metas & self.sol.keys():
                t = type_substitute(t, m, self.sol[m])
            metas = _names(t, "?")
        return t

    def has_metas(self, t: Type) -> bool:
        return bool(_names(self.zonk(t), "?"))

    def _resolve(self, t: Type) -> Type:
        while _is_meta(t) and t.name in self.sol:
            t = self.sol[t.name]
        return t

    def unify(self, a: Type, b: Type) -> None:
        a, b = self._resolve(a), self._resolve(b)
        if _is_meta(a):
            if not (_is_meta(b) and b.name == a.name):
                self._bind(a.name, b)
        elif _is_meta(b):
            self._bind(b.name, a)
        elif isinstance(a, TVar) and isinstance(b, TVar):
            if a.name != b.name:
                self._fail(a, b)
        elif isinstance(a, Arrow) and isinstance(b, Arrow):
            self.unify(a.dom, b.dom)
            self.unify(a.cod, b.cod)
        elif isinstance(a, With) and isinstance(b, With):
            self.unify(a.left, b.left)
            self.unify(a.right, b.right)
        elif isinstance(a, TBang) and isinstance(b, TBang):
            self.unify(a.body, b.body)
        elif isinstance(a, Forall) and isinstance(b, Forall):
            r = TVar(f"%{next(_rigid_ids)}")
            self.unify(type_substitute(a.body, a.var, r), type_substitute(b.body, b.var, r))
        else:
            self._fail(a, b)

    def _bind(self, m: str, t: Type) -> None:
        t = self.zonk(t)
        if m in free_type_vars(t):
            raise BuildError(f"cyclic type: {m} occurs in {show_type(t)}")
        if _names(t, "%"):
            raise BuildError(f"bound type variable escapes its quantifier in {show_type(t)}")
        if isinstance(t, TBang):
            raise BuildError(f"cannot instantiate a quantifier with the exponential {show_type(t)}")
        self.sol[m] = t

    def _fail(self, a, b):
        raise BuildError(f"type mismatch: {show_type(self.zonk(a))} vs {show_type(self.zonk(b))}")


# ---------------------------------------------------------------------------
# helpers


def _unapp(t: Term) -> tuple[Term, list[Term]]:
    args = []
    while True:
        if isinstance(t, App):
            args.append(t.arg)
            t = t.fun
        elif isinstance(t, Sugar) and not isinstance(t, (Ann, Inst, Unit)):
            t = t.desugar()
        else:
            break
    args.reverse()
    return t, args


def _head_synthable(t: Term) -> bool:
    return isinstance(t, (Var, Der, Ann, Inst, Unit, Bang, Proj, Pair, Copy))


def _der_var(t: Term) -> str | None:
    while isinstance(t, Der):
        t = t.body
    return t.name if isinstance(t, Var) else None


def _split(children: list[Term], env: dict[str, Type]):
    """Rename banged variables shared between children apart."""
    counts: dict[str, int] = {}
    for c in children:
        for x in c.fv:
            counts[x] = counts.get(x, 0) + 1
    shared = [x for x, k in counts.items() if k > 1]
    if not shared:
        return children, env, []
    env = dict(env)
    merges = []
    children = list(children)
    for x in shared:
        t = _lookup(env, x)
        if not isinstance(t, TBang):
            raise BuildError(f"linear variable {x} is used more than once")
        names: list[str] = []
        for i, c in enumerate(children):
            if x not in c.fv:
                continue
            if not _all_under_der(c, x):
                raise BuildError(f"{x} : {show_type(t)} occurs outside a dereliction in {c}")
            avoid = env.keys() | c.fv
            children[i] = _strip_each(c, x, lambda: fresh_name(x, avoid), names)
        for y in names:
            env[y] = t.body
        merges.append((names, x))
    return children, env, merges


def _strip_each(t: Term, x: str, fresh, out: list[str]) -> Term:
    """Replace each free ``d(x)`` by its own fresh name, collected in ``out``."""
    if x not in t._occ:
        return t
    if isinstance(t, Der) and isinstance(t.body, Var) and t.body.name == x:
        y = fresh()
        out.append(y)
        return Var(y)
    return t.rebuild(tuple(
        c if x in t.binds(i) else _strip_each(c, x, fresh, out) for i, c in enumerate(t.children())
    ))


def _lookup(env, x):
    try:
        return env[x]
    except KeyError:
        raise BuildError(f"unbound variable {x}") from None


def _apply_merges(d: Derivation, merges) -> Derivation:
    for names, x in merges:
        d = D.merge(d, names, x)
    return d


def _strip_box(n: Term, env: dict[str, Type]):
    env = dict(env)
    ren = {}
    for y in sorted(n.fv):
        t = _lookup(env, y)
        if not isinstance(t, TBang):
            raise BuildError(f"{y} : {show_type(t)} is free in a box but not banged")
        if not _all_under_der(n, y):
            raise BuildError(f"{y} occurs in a box outside a dereliction")
        y2 = fresh_name(y, env.keys() | n.fv)
        n = strip_der(n, y, y2)
        env[y2] = t.body
        ren[y2] = y
    return n, env, ren


def _ctx_ftv(t: Term, env) -> set[str]:
    out: set[str] = set()
    for x in t.fv:
        out |= free_type_vars(_lookup(env, x))
    return out


# ---------------------------------------------------------------------------
# checking and synthesis


def check(t: Term, env: dict[str, Type], ty: Type) -> Derivation:
    if isinstance(t, Var) and env.get(t.name) == ty:
        if isinstance(ty, TBang):
            raise BuildError(f"banged variable {t.name} used without dereliction")
        return D.ax(t.name, ty)
    if isinstance(ty, Forall) and not isinstance(t, (Pair, Proj, Copy)):
        used = _ctx_ftv(t, env)
        gamma = ty.var
        if gamma in used:
            gamma = fresh_tvar(ty.var, used | free_type_vars(ty))
        body = ty.body if gamma == ty.var else type_substitute(ty.body, ty.var, TVar(gamma))
        return D.gen(check(t, env, body), gamma, ty.var)
    if isinstance(t, Lam):
        if not isinstance(ty, Arrow) or isinstance(ty.dom, TBang):
            raise BuildError(f"λ{t.var} checked against {show_type(ty)}")
        d = check(t.body, {**env, t.var: ty.dom}, ty.cod)
        return D.lam(t.var, d)
    if isinstance(t, BLam):
        if not isinstance(ty, Arrow) or not isinstance(ty.dom, TBang):
            raise BuildError(f"λ!{t.var} checked against {show_type(ty)}")
        d = check(t.body, {**env, t.var: ty.dom}, ty.cod)
        if t.var not in t.body.fv:
            d = D.merge(d, (), t.var, ty.dom.body)
        return D.lam(t.var, d)
    if isinstance(t, Bang):
        if not isinstance(ty, TBang):
            raise BuildError(f"box checked against {show_type(ty)}")
        n, env2, ren = _strip_box(t.body, env)
        return D.sp(check(n, env2, ty.body), ren)
    if isinstance(t, Pair):
        if not isinstance(ty, With):
            raise BuildError(f"pair checked against {show_type(ty)}")
        if t.fv:
            raise BuildError("a bare pair must be closed")
        return D.pair_intro(check(t.left, env, ty.left), check(t.right, env, ty.right))
    if isinstance(t, Proj):
        return D.proj_elim(check(t.body, env, With(ty, ty)))
    if isinstance(t, Copy):
        if not isinstance(ty, With):
            raise BuildError(f"copy checked against {show_type(ty)}")
        return _copy(t, env, ty.left, ty.right)
    if isinstance(t, Ann):
        d = check(t.body, env, t.typ)
        return _coerce(d, ty)
    if isinstance(t, Sugar) and not isinstance(t, (Inst, Unit)):
        return check(t.desugar(), env, ty)
    return _spine(t, env, ty)


def synth(t: Term, env: dict[str, Type]) -> Derivation:
    if isinstance(t, Var):
        a = _lookup(env, t.name)
        if isinstance(a, TBang):
            raise BuildError(f"banged variable {t.name} used without dereliction")
        return D.ax(t.name, a)
    if isinstance(t, Der):
        x = _der_var(t)
        if x is None:
            raise BuildError(f"dereliction of a non-variable: {t}")
        a = _lookup(env, x)
        if not isinstance(a, TBang):
            raise BuildError(f"dereliction of {x} : {show_type(a)}")
        y = fresh_name(x, env.keys() | t.fv)
        d = synth(strip_der(t, x, y), {**env, y: a.body})
        return D.merge(d, (y,), x)
    if isinstance(t, Ann):
        return check(t.body, env, t.typ)
    if isinstance(t, Inst):
        d = synth(t.body, env)
        for b in t.types:
            d = D.inst(d, b)
        return d
    if isinstance(t, Unit):
        return check(t.desugar(), env, UNIT)
    if isinstance(t, Bang):
        n, env2, ren = _strip_box(t.body, env)
        return D.sp(synth(n, env2), ren)
    if isinstance(t, Pair):
        if t.fv:
            raise BuildError("a bare pair must be closed")
        return D.pair_intro(synth(t.left, env), synth(t.right, env))
    if isinstance(t, Proj):
        d = synth(t.body, env)
        if not isinstance(d.type, With) or d.type.left != d.type.right:
            raise BuildError(f"projection of {show_type(d.type)}")
        return D.proj_elim(d)
    if isinstance(t, Copy):
        return _copy(t, env, None, None)
    if isinstance(t, (Lam, BLam)):
        raise BuildError(f"cannot infer the type of an abstraction; annotate {t}")
    if isinstance(t, Sugar):
        return synth(t.desugar(), env)
    return _spine(t, env, None)


def _coerce(d: Derivation, ty: Type) -> Derivation:
    """Instantiate leading quantifiers of ``d`` to reach ``ty``."""
    if d.type == ty:
        return d
    s = Solver()
    metas = []
    t = d.type
    while isinstance(t, Forall) and not isinstance(ty, Forall):
        m = s.fresh()
        metas.append(m)
        t = type_substitute(t.body, t.var, TVar(m))
    s.unify(t, ty)
    for m in metas:
        d = D.inst(d, _default(s.zonk(TVar(m))))
    if d.type != ty:
        raise BuildError(f"expected {show_type(ty)}, got {show_type(d.type)}")
    return d


def _default(t: Type) -> Type:
    for m in _names(t, "?"):
        t = type_substitute(t, m, UNIT)
    return t


def _copy(t: Copy, env, left: Type | None, right: Type | None) -> Derivation:
    if left is not None and t.left == Var(t.x) and not _synthable(t.scrut):
        dn = check(t.scrut, env, left)
    else:
        dn = synth(t.scrut, env)
    c = dn.type
    d1 = check(t.left, {t.x: c}, left) if left is not None else synth(t.left, {t.x: c})
    d2 = check(t.right, {t.y: c}, right) if right is not None else synth(t.right, {t.y: c})
    if t.bound.fv:
        raise BuildError("the copy value must be closed")
    dv = check(t.bound, {}, c)
    return D.copy_intro(dn, d1, d2, dv)


def _spine(t: Term, env: dict[str, Type], expected: Type | None) -> Derivation:
    head, args = _unapp(t)
    kids, env, merges = _split([head, *args], env)
    head, args = kids[0], kids[1:]

    if not _head_synthable(head):
        if expected is None:
            raise BuildError(f"cannot infer the type of {t}; add an annotation")
        ads = [synth(a, env) for a in args]
        d = check(head, env, _arrows([a.type for a in ads], expected))
        for a in ads:
            d = D.app(d, a)
        return _apply_merges(d, merges)

    dh = synth(head, env)
    s = Solver()
    plan: list = []
    h = dh.type
    for i in range(len(args)):
        while isinstance(h, Forall):
            m = s.fresh()
            plan.append(("inst", m))
            h = type_substitute(h.body, h.var, TVar(m))
        h = s.zonk(h)
        if not isinstance(h, Arrow):
            raise BuildError(f"{head} : {show_type(dh.type)} is applied to too many arguments")
        plan.append(("arg", i, h.dom))
        h = h.cod
    if expected is not None:
        while isinstance(s.zonk(h), Forall) and not isinstance(expected, Forall):
            hz = s.zonk(h)
            m = s.fresh()
            plan.append(("inst", m))
            h = type_substitute(hz.body, hz.var, TVar(m))
        s.unify(h, expected)

    arg_ds: dict[int, tuple[Derivation, list[str]]] = {}
    for step in plan:
        if step[0] != "arg":
            continue
        _, i, dom = step
        if s.has_metas(dom) and _synthable(args[i]):
            try:
                da = synth(args[i], env)
            except BuildError:
                continue
            arg_ds[i] = _unify_arg(s, dom, da)
    for step in plan:
        if step[0] != "arg" or step[1] in arg_ds:
            continue
        _, i, dom = step
        dz = s.zonk(dom)
        if _names(dz, "?"):
            raise BuildError(
                f"cannot infer the instantiation for argument {args[i]} of {head}; add an annotation")
        arg_ds[i] = (check(args[i], env, dz), [])

    d = dh
    for step in plan:
        if step[0] == "inst":
            d = D.inst(d, _default(s.zonk(TVar(step[1]))))
        else:
            da, metas = arg_ds[step[1]]
            for m in metas:
                da = D.inst(da, _default(s.zonk(TVar(m))))
            d = D.app(d, da)
    d = _apply_merges(d, merges)
    if expected is not None and d.type != expected:
        raise BuildError(f"expected {show_type(expected)}, got {show_type(d.type)}")
    return d


def _unify_arg(s: Solver, dom: Type, da: Derivation):
    """Unify a synthesized argument with its domain, opening the argument's
    own quantifiers when a direct match fails."""
    trial = Solver()
    trial.sol = dict(s.sol)
    try:
        trial.unify(dom, da.type)
        s.sol = trial.sol
        return da, []
    except BuildError:
        if not isinstance(da.type, Forall):
            raise
    metas = []
    t = da.type
    while isinstance(t, Forall):
        m = s.fresh()
        metas.append(m)
        t = type_substitute(t.body, t.var, TVar(m))
    s.unify(dom, t)
    return da, metas


def _arrows(doms: list[Type], cod: Type) -> Type:
    for a in reversed(doms):
        cod = Arrow(a, cod)
    return cod


def _synthable(t: Term) -> bool:
    while isinstance(t, Sugar) and not isinstance(t, (Ann, Inst, Unit)):
        t = t.desugar()
    if _head_synthable(t):
        return True
    if isinstance(t, App):
        h, _ = _unapp(t)
        return _head_synthable(h)
    return False


# ---------------------------------------------------------------------------
# entry point


def derive(term: Term, ctx: dict[str, Type] | None = None, ty: Type | None = None) -> Derivation:
    """Build a derivation of ``ctx ⊢ term : ty`` (``ty`` inferred when None).

    Assumptions of ``ctx`` that ``term`` does not use must be banged; they
    are introduced by weakening.
    """
    ctx = dict(ctx or {})
    old = sys.getrecursionlimit()
    sys.setrecursionlimit(max(old, 200000))
    try:
        d = synth(term, ctx) if ty is None else check(term, ctx, ty)
    finally:
        sys.setrecursionlimit(old)
    for x, a in ctx.items():
        if x in d.ctx:
            continue
        if not isinstance(a, TBang):
            raise BuildError(f"linear assumption {x} is not used")
        d = D.merge(d, (), x, a.body)
    return d
