"""Data-type encodings and the compiler from probabilistic Turing machines.

Every builder returns an :class:`Encoded` triple: the elaborated term, a
checked derivation of it, and its type.  Builders are memoised on their
arguments.

Deviations from the displayed definitions, all forced by explicit
dereliction (a box only sees its free banged variables under ``d``) and by
the linearity of the calculus, are listed in the module README section and
repeated on the builders that carry them.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Mapping, Sequence

from .builder import derive
from .derivations import Derivation, check_derivation
from .ptypes import Arrow, Forall, TVar, Type, tbangs
from .sugar import (
    BOOL, ONE, UNIT, ZERO, Ann, If, Inst, LetTensor, LetUnit, Tensor, Unit,
    bool_value, compose, elaborate, eraser, tensor_type,
)
from .terms import App, Bang, BLam, Copy, Der, Lam, Proj, Term, Var, apps, bangs, ders, lams

__all__ = [
    "Encoded", "nat_type", "string_type", "bools_type", "ptm_type", "id_type",
    "bool_term", "decode_bool", "string_term", "decode_string", "numeral",
    "decode_numeral", "succ_term", "add_term", "mult_term", "coerce_term",
    "len_term", "nat_eraser", "poly_to_term", "Poly", "DecodeError",
    "tuple_term", "decode_tuple", "table_term", "delta_encode", "delta_p_term",
    "poly_index", "config_term", "decode_config", "decom_term", "com_term", "tr_term",
    "init_term", "move_right_term", "write_back_term", "shift_term", "in_term",
    "ext_s_term", "ext_b_term", "Layout", "halting_tables", "delta_p_for",
    "ptm_compile", "compiled_input",
]


class DecodeError(ValueError):
    """The term is not the normal form of an encoding."""

    code = "not-a-normal-form"


@dataclass(frozen=True)
class Encoded:
    term: Term
    derivation: Derivation
    type: Type

    def __iter__(self):
        # allows ``term, derivation = builder(...)``
        yield self.term
        yield self.derivation


# elaborated term key -> the sugared source it was built from; the builder
# needs the source's hints when an encoding is reused inside a larger term
_SOURCES: dict = {}


def _build(term: Term, ty: Type, ctx: dict[str, Type] | None = None) -> Encoded:
    d = derive(term, ctx or {}, ty)
    check_derivation(d)
    _SOURCES.setdefault((d.subject.key(), ty), term)
    return Encoded(d.subject, d, ty)


def _src(t: Term, ty: Type) -> Term:
    """``t`` annotated with ``ty``, using its sugared source when known."""
    return Ann(_SOURCES.get((t.key(), ty), t), ty)


def _a(e: Encoded) -> Term:
    """An encoding as an annotated subterm for the builder."""
    return _src(e.term, e.type)


A = TVar("a")


def _endo(t: Type) -> Type:
    return Arrow(t, t)


# ---------------------------------------------------------------------------
# types


def nat_type(i: int = 1) -> Type:
    """``N_i = ∀a. !^i(a ⊸ a) ⊸ a ⊸ a``."""
    _index(i)
    return Forall("a", Arrow(tbangs(_endo(A), i), _endo(A)))


def string_type(i: int = 1) -> Type:
    """``S_i = ∀a. !^i(B ⊸ a ⊸ a) ⊸ a ⊸ a``."""
    _index(i)
    return Forall("a", Arrow(tbangs(Arrow(BOOL, _endo(A)), i), _endo(A)))


def bools_type(n: int) -> Type:
    """``B^n``: ``B`` itself for n = 1, the flat n-ary tensor otherwise."""
    if n < 1:
        raise ValueError("tuple width must be positive")
    return BOOL if n == 1 else tensor_type(*([BOOL] * n))


def ptm_type(i: int, k: int) -> Type:
    """``PTM^k_i = ∀a. !^i(B ⊸ a ⊸ a) ⊸ (a ⊸ a) ⊗ (a ⊸ a) ⊗ B^k``."""
    _index(i)
    return Forall("a", Arrow(tbangs(Arrow(BOOL, _endo(A)), i),
                             tensor_type(_endo(A), _endo(A), bools_type(k))))


def id_type(i: int, k: int) -> Type:
    """``ID^k_i``: the decomposed configuration
    ``(a⊸a) ⊗ (a⊸a) ⊗ C ⊗ B ⊗ C ⊗ B ⊗ B^k`` with ``C = B ⊸ a ⊸ a``."""
    _index(i)
    c = Arrow(BOOL, _endo(A))
    return Forall("a", Arrow(tbangs(c, i), tensor_type(
        _endo(A), _endo(A), c, BOOL, c, BOOL, bools_type(k))))


def _index(i: int) -> None:
    if i < 1:
        raise ValueError("indices start at 1")


# ---------------------------------------------------------------------------
# booleans and tuples


@lru_cache(maxsize=None)
def bool_term(b: int) -> Encoded:
    """``0̲ = λxy. x ⊗ y`` and ``1̲ = λxy. y ⊗ x`` at ``B``."""
    if b not in (0, 1):
        raise ValueError("a bit is 0 or 1")
    return _build(bool_value(b), BOOL)


def decode_bool(t: Term) -> int:
    if t == ZERO:
        return 0
    if t == ONE:
        return 1
    raise DecodeError(f"not a boolean normal form: {t}")


def tuple_term(bits: Sequence[int]) -> Term:
    """The closed value encoding a bit tuple at ``B^n``."""
    if len(bits) == 1:
        return bool_value(bits[0])
    return elaborate(Tensor(tuple(bool_value(b) for b in bits)))


def decode_tuple(t: Term, n: int) -> tuple[int, ...]:
    if n == 1:
        return (decode_bool(t),)
    if not isinstance(t, Lam):
        raise DecodeError(f"not a tuple normal form: {t}")
    head, args = _spine(t.body)
    if head != Var(t.var) or len(args) != n:
        raise DecodeError(f"not a {n}-tuple normal form: {t}")
    return tuple(decode_bool(a) for a in args)


def _spine(t: Term) -> tuple[Term, list[Term]]:
    args = []
    while isinstance(t, App):
        args.append(t.arg)
        t = t.fun
    args.reverse()
    return t, args


# ---------------------------------------------------------------------------
# strings


@lru_cache(maxsize=None)
def string_term(s: str, i: int = 1) -> Encoded:
    """``s̲_i = λ!c.λz. d^i(c) b̲1 (… (d^i(c) b̲n z) …)`` at ``S_i``."""
    _bits(s)
    body: Term = Var("z")
    for ch in reversed(s):
        body = apps(ders(Var("c"), i), bool_value(int(ch)), body)
    return _build(BLam("c", Lam("z", body)), string_type(i))


def decode_string(t: Term) -> str:
    """Inverse of :func:`string_term` on surface normal forms of any index."""
    if not isinstance(t, BLam) or not isinstance(t.body, Lam):
        raise DecodeError(f"not a string normal form: {t}")
    c, z = t.var, t.body.var
    out = []
    cur = t.body.body
    while cur != Var(z):
        head, args = _spine(cur)
        if len(args) != 2 or not _is_ders_of(head, c):
            raise DecodeError(f"not a string normal form: {t}")
        out.append(str(decode_bool(args[0])))
        cur = args[1]
    return "".join(out)


def _is_ders_of(t: Term, x: str) -> bool:
    n = 0
    while isinstance(t, Der):
        t = t.body
        n += 1
    return n >= 1 and t == Var(x)


def _bits(s: str) -> None:
    if any(ch not in "01" for ch in s):
        raise ValueError(f"not a bit string: {s!r}")


# ---------------------------------------------------------------------------
# numerals and arithmetic


@lru_cache(maxsize=None)
def numeral(n: int, i: int = 1) -> Encoded:
    """``n̲_i = λ!f.λx. d^i(f) (… (d^i(f) x) …)`` at ``N_i``."""
    if n < 0:
        raise ValueError("numerals are natural numbers")
    body: Term = Var("x")
    for _ in range(n):
        body = App(ders(Var("f"), i), body)
    return _build(BLam("f", Lam("x", body)), nat_type(i))


def decode_numeral(t: Term) -> int:
    if not isinstance(t, BLam) or not isinstance(t.body, Lam):
        raise DecodeError(f"not a numeral normal form: {t}")
    f, x = t.var, t.body.var
    n = 0
    cur = t.body.body
    while cur != Var(x):
        if not isinstance(cur, App) or not _is_ders_of(cur.fun, f):
            raise DecodeError(f"not a numeral normal form: {t}")
        n += 1
        cur = cur.arg
    return n


@lru_cache(maxsize=None)
def succ_term(i: int = 1) -> Encoded:
    """``succ_i = λn.λ!f.λx. d^{i+1}(f) (n !^i(d^{i+1}(f)) x)`` at ``N_i ⊸ N_{i+1}``."""
    f = ders(Var("f"), i + 1)
    n = Ann(Var("n"), nat_type(i))
    body = App(f, apps(n, bangs(ders(Var("f"), i + 1), i), Var("x")))
    return _build(lams("n !f x", body), Arrow(nat_type(i), nat_type(i + 1)))


@lru_cache(maxsize=None)
def add_term(i: int = 1, j: int = 1) -> Encoded:
    """``add_{i,j} = λn.λm.λ!f.λx. n !^i(d^h(f)) (m !^j(d^h(f)) x)`` with
    ``h = max(i, j) + 1``, at ``N_i ⊸ N_j ⊸ N_h``."""
    h = max(i, j) + 1
    body = apps(Var("n"), bangs(ders(Var("f"), h), i),
                apps(Var("m"), bangs(ders(Var("f"), h), j), Var("x")))
    return _build(lams("n m !f x", body), Arrow(nat_type(i), Arrow(nat_type(j), nat_type(h))))


@lru_cache(maxsize=None)
def mult_term(i: int = 1, j: int = 1) -> Encoded:
    """``mult_{i,j} = λn.λ!m.λ!f. n !^i(d^i(m) !^j(d^{i+j}(f)))`` at
    ``N_i ⊸ !^i N_j ⊸ N_{i+j}``.

    The second argument is bound by a bang abstraction and used under
    ``d^i``: inside ``i`` boxes a free banged variable can only occur
    derelicted.
    """
    inner = App(ders(Var("m"), i), bangs(ders(Var("f"), i + j), j))
    body = App(Var("n"), bangs(inner, i))
    ty = Arrow(nat_type(i), Arrow(tbangs(nat_type(j), i), nat_type(i + j)))
    return _build(lams("n !m !f", body), ty)


@lru_cache(maxsize=None)
def coerce_term(i: int, j: int) -> Encoded:
    """``λn.λ!f. n !^i(d^j(f))`` at ``N_i ⊸ N_j`` for ``j ≥ i``."""
    if j < i:
        raise ValueError("numerals can only move to a larger index")
    body = App(Var("n"), bangs(ders(Var("f"), j), i))
    return _build(lams("n !f", body), Arrow(nat_type(i), nat_type(j)))


@lru_cache(maxsize=None)
def nat_eraser() -> Encoded:
    """``E_N = λn. n !(λz.z) I`` at ``N ⊸ 𝟏``."""
    body = apps(Inst_(Var("n"), UNIT), Bang(Lam("z", Var("z"))), Unit())
    return _build(Lam("n", body), Arrow(nat_type(1), UNIT))


def Inst_(t: Term, ty: Type) -> Term:
    return Inst(t, (ty,))


@lru_cache(maxsize=None)
def len_term(i: int = 1) -> Encoded:
    """``len_i = λs.λ!f. s !^i(λx.λy. let E_B x be I in d^i(f) y)`` at
    ``S_i ⊸ N_i``.

    The iterated function is bound with a bang abstraction and derelicted
    inside the box, as explicit dereliction requires.
    """
    step = lams("x y", LetUnit(App(Ann(eraser(BOOL), Arrow(BOOL, UNIT)), Var("x")),
                               App(ders(Var("f"), i), Var("y"))))
    body = App(Var("s"), bangs(step, i))
    return _build(lams("s !f", body), Arrow(string_type(i), nat_type(i)))


# ---------------------------------------------------------------------------
# polynomials


@dataclass(frozen=True)
class Poly:
    """A polynomial with natural coefficients, lowest degree first."""

    coeffs: tuple[int, ...]

    def __post_init__(self):
        c = tuple(int(x) for x in self.coeffs)
        if any(x < 0 for x in c):
            raise ValueError("unsupported polynomial: negative coefficient")
        while len(c) > 1 and c[-1] == 0:
            c = c[:-1]
        object.__setattr__(self, "coeffs", c or (0,))

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    def __call__(self, n: int) -> int:
        acc = 0
        for a in reversed(self.coeffs):
            acc = acc * n + a
        return acc

    def __add__(self, other: "Poly") -> "Poly":
        m = max(len(self.coeffs), len(other.coeffs))
        a = self.coeffs + (0,) * (m - len(self.coeffs))
        b = other.coeffs + (0,) * (m - len(other.coeffs))
        return Poly(tuple(x + y for x, y in zip(a, b)))

    @classmethod
    def parse(cls, text: str) -> "Poly":
        """Parse ``"3x^2 + x + 1"``-style text (``n`` is accepted for ``x``)."""
        text = text.replace(" ", "").replace("n", "x").replace("*", "")
        if not text:
            raise ValueError("empty polynomial")
        coeffs: dict[int, int] = {}
        for term in text.split("+"):
            if not term:
                raise ValueError(f"bad polynomial {text!r}")
            if "x" in term:
                c, _, e = term.partition("x")
                k = int(c) if c else 1
                e = e.lstrip("^")
                d = int(e) if e else 1
            else:
                k, d = int(term), 0
            coeffs[d] = coeffs.get(d, 0) + k
        return cls(tuple(coeffs.get(d, 0) for d in range(max(coeffs) + 1)))

    def __str__(self):
        parts = []
        for d, a in reversed(list(enumerate(self.coeffs))):
            if a == 0 and self.degree > 0:
                continue
            parts.append(str(a) if d == 0 else f"{'' if a == 1 else a}x" + (f"^{d}" if d > 1 else ""))
        return " + ".join(parts) or "0"


def _poly_source(p: Poly, x: Term) -> Term:
    """Horner form of ``p`` with ``x : N`` standing for the argument."""
    d = p.degree
    if d == 0:
        return LetUnit(App(_a(nat_eraser()), x), _a(numeral(p.coeffs[0], 1)))
    q: Term = _a(numeral(p.coeffs[d], 1))
    j = 1
    for k in range(d - 1, -1, -1):
        prod = apps(_a(mult_term(1, j)), x, Bang(q))
        q = apps(_a(add_term(1, j + 1)), _a(numeral(p.coeffs[k], 1)), prod)
        j += 2
    return q


def poly_index(p: Poly) -> int:
    """The numeral index ``2 deg(p) + 1`` of the represented polynomial."""
    return 2 * p.degree + 1


@lru_cache(maxsize=None)
def poly_to_term(p: Poly | tuple, var: str = "x") -> Encoded:
    """``x : !^d N ⊢ p̲ : N_{2d+1}`` for ``p`` of degree ``d`` (Horner form).

    ``q_d = a̲_d`` and ``q_k = add_{1,2(d-k)}(a̲_k, mult_{1,2(d-k)-1}(d^d(x), !q_{k+1}))``.
    A constant polynomial erases its argument: ``x : N ⊢ let E_N x be I in a̲_0``.
    """
    if not isinstance(p, Poly):
        p = Poly(tuple(p))
    d = p.degree
    ctx = {var: tbangs(nat_type(1), d) if d else nat_type(1)}
    return _build(_poly_source(p, ders(Var(var), d)), nat_type(poly_index(p)), ctx)


# ---------------------------------------------------------------------------
# transition functions


def _tuple_vars(stem: str, n: int) -> tuple[str, ...]:
    return tuple(f"{stem}{j}" for j in range(1, n + 1))


def _let_tuple(scrut: Term, names: Sequence[str], body: Term) -> Term:
    """``let scrut be x1 ⊗ … ⊗ xn in body``; plain substitution when n = 1."""
    if len(names) == 1:
        return App(Lam(names[0], body), scrut)
    return LetTensor(scrut, tuple(names), body)


def _tuple_of(items: Sequence[Term]) -> Term:
    return items[0] if len(items) == 1 else Tensor(tuple(items))


def table_term(table: Callable[[tuple[int, ...]], tuple[int, ...]], n_in: int, n_out: int) -> Term:
    """Closed ``B ⊸ … ⊸ B ⊸ B^{n_out}`` (``n_in`` arguments) computing a total
    boolean function by its truth table.

    ``H(w, 0)`` is the output tuple of ``w`` and ``H(w, m) = λy1 … ym.
    (if y1 then H(w0, m-1) else H(w1, m-1)) y2 … ym``; the discarded branch
    is a closed function erased by the eraser of its arrow type.
    """
    out_t = bools_type(n_out)

    def h(prefix: tuple[int, ...], m: int) -> Term:
        if m == 0:
            return tuple_term(table(prefix))
        ys = _tuple_vars(f"y{n_in - m}_", m)
        branch_t = out_t
        for _ in range(m - 1):
            branch_t = Arrow(BOOL, branch_t)
        sel = If(Var(ys[0]), h(prefix + (0,), m - 1), h(prefix + (1,), m - 1), branch_t)
        return lams(list(ys), apps(sel, *map(Var, ys[1:])))

    return h((), n_in)


@lru_cache(maxsize=None)
def _delta_encode(rows: tuple[tuple[tuple[int, ...], tuple[int, ...]], ...], n: int) -> Encoded:
    table = dict(rows)
    xs = _tuple_vars("x", n + 1)
    body = apps(table_term(table.__getitem__, n + 1, n + 2), *map(Var, xs))
    term = Lam("x", _let_tuple(Ann(Var("x"), bools_type(n + 1)), xs, body))
    return _build(term, Arrow(bools_type(n + 1), bools_type(n + 2)))


def delta_encode(table: Mapping[tuple[str, int], tuple[str, int, str]] | Mapping, n: int) -> Encoded:
    """``δ : B^{n+1} ⊸ B^{n+2}`` for a transition table ``(state, read) ↦
    (next, write, move)`` on ``n``-bit states.

    The input tuple is state-first ``q1 ⊗ … ⊗ qn ⊗ b`` and the output is
    ``q'1 ⊗ … ⊗ q'n ⊗ b' ⊗ m`` with the move encoded as ``0̲`` for left and
    ``1̲`` for right.  Entries may be :class:`psta.ptm.Transition` values or
    plain triples.
    """
    rows = []
    for i in range(2 ** n):
        s = format(i, f"0{n}b")
        for b in (0, 1):
            if (s, b) not in table:
                raise ValueError(f"non-total table: no entry for state {s} reading {b}")
            nxt, w, mv = tuple(table[(s, b)]) if not hasattr(table[(s, b)], "next") else (
                table[(s, b)].next, table[(s, b)].write, table[(s, b)].move)
            if len(nxt) != n:
                raise ValueError(f"next state {nxt!r} is not {n} bits wide")
            key = tuple(int(ch) for ch in s) + (b,)
            rows.append((key, tuple(int(ch) for ch in nxt) + (int(w), 1 if mv in ("R", 1) else 0)))
    return _delta_encode(tuple(rows), n)


@lru_cache(maxsize=None)
def delta_p_term(d0: Term, d1: Term, n: int) -> Encoded:
    """``δ_P = λx. proj(copy^{0̲^{n+1}} x as x0,x1 in ⟨δ0 x0, δ1 x1⟩)``."""
    t_in, t_out = bools_type(n + 1), bools_type(n + 2)
    ft = Arrow(t_in, t_out)
    body = Proj(Copy(tuple_term((0,) * (n + 1)), Ann(Var("x"), t_in), "x0", "x1",
                     App(_src(d0, ft), Var("x0")), App(_src(d1, ft), Var("x1"))))
    return _build(Lam("x", body), ft)


# ---------------------------------------------------------------------------
# configurations
#
# A configuration with tape ``b0 … b_{n-1}``, head on cell h and state q is
# ``λ!c. l ⊗ r ⊗ q`` where ``l = d^i(c) b_{h-1} ∘ … ∘ d^i(c) b0`` holds the
# cells left of the head, nearest first, and ``r = d^i(c) b_h ∘ … ∘
# d^i(c) b_{n-1}`` the head cell and the cells to its right.

CELL = Arrow(BOOL, _endo(A))


def _cells(c: Term, bits: Sequence[int]) -> Term:
    """``λz. c b1 (… (c bn z) …)``."""
    body: Term = Var("z")
    for b in reversed(bits):
        body = apps(c, bool_value(b), body)
    return Lam("z", body)


@lru_cache(maxsize=None)
def config_term(left: tuple[int, ...] | str, right: tuple[int, ...] | str, state: tuple[int, ...] | str,
                i: int, k: int) -> Encoded:
    """The configuration with ``left`` the cells before the head (tape order),
    ``right`` the head cell onwards and ``state`` a k-bit state."""
    left, right, state = (tuple(int(b) for b in x) for x in (left, right, state))
    if len(state) != k:
        raise ValueError(f"state {state} is not {k} bits wide")
    c = ders(Var("c"), i)
    body = Tensor((_cells(c, tuple(reversed(left))), _cells(c, right), tuple_term(state)))
    return _build(BLam("c", body), ptm_type(i, k))


def decode_config(t: Term, k: int) -> tuple[str, str, str]:
    """``(left, right, state)`` as bit strings, from a configuration SNF."""
    if not isinstance(t, BLam) or not isinstance(t.body, Lam):
        raise DecodeError(f"not a configuration normal form: {t}")
    c = t.var
    head, args = _spine(t.body.body)
    if head != Var(t.body.var) or len(args) != 3:
        raise DecodeError(f"not a configuration normal form: {t}")

    def cells(f: Term) -> str:
        if not isinstance(f, Lam):
            raise DecodeError(f"not a cell list: {f}")
        out, cur = [], f.body
        while cur != Var(f.var):
            h, a = _spine(cur)
            if len(a) != 2 or not _is_ders_of(h, c):
                raise DecodeError(f"not a cell list: {f}")
            out.append(str(decode_bool(a[0])))
            cur = a[1]
        return "".join(out)

    left = cells(args[0])[::-1]
    right = cells(args[1])
    state = "".join(map(str, decode_tuple(args[2], k)))
    return left, right, state


def _skip() -> Term:
    """``λx. let E_B x be I in I`` : ``B ⊸ a ⊸ a``, the cell of an empty side."""
    return Lam("x", LetUnit(App(Ann(eraser(BOOL), Arrow(BOOL, UNIT)), Var("x")), Unit()))


def _config_names(k: int) -> tuple[str, ...]:
    return ("l", "r", "cl", "bl", "cr", "br", "q")


@lru_cache(maxsize=None)
def decom_term(i: int, k: int) -> Encoded:
    """``decom_i : PTM^k_i ⊸ ID^k_i`` isolates the cell nearest the head on
    each side together with its cell function (``d^i(c)``, or an eraser
    when the side is empty).

    ``F[x] = λb.λz. let z be g ⊗ h ⊗ j in (h j ∘ g) ⊗ x ⊗ b`` is iterated
    over each side from the dummy ``I ⊗ (λx. let E_B x be I in I) ⊗ 0̲``.
    """
    acc = tensor_type(_endo(A), CELL, BOOL)
    c = ders(Var("c"), i)
    f = lams("b z", LetTensor(Ann(Var("z"), acc), ("g", "h", "j"),
                              Tensor((compose(App(Var("h"), Var("j")), Var("g")), c, Var("b")))))
    dummy = Ann(Tensor((Unit(), _skip(), ZERO)), acc)
    m = Inst(Ann(Var("m"), ptm_type(i, k)), (acc,))
    side = Arrow(acc, acc)
    body = LetTensor(App(m, bangs(f, i)), ("l", "r", "q"),
           LetTensor(App(Ann(Var("l"), side), dummy), ("gl", "cl", "bl"),
           LetTensor(App(Ann(Var("r"), side), dummy), ("gr", "cr", "br"),
                     Tensor(tuple(Var(v) for v in ("gl", "gr", "cl", "bl", "cr", "br", "q"))))))
    return _build(lams("m !c", body), Arrow(ptm_type(i, k), id_type(i, k)))


def _open_id(s: Term, i: int, k: int, body: Term) -> Term:
    """``let s !^i(d^i(c)) be l ⊗ r ⊗ cl ⊗ bl ⊗ cr ⊗ br ⊗ q in body``."""
    return LetTensor(App(Ann(s, id_type(i, k)), bangs(ders(Var("c"), i), i)),
                     _config_names(k), body)


@lru_cache(maxsize=None)
def com_term(i: int, k: int, dp: Term) -> Encoded:
    """``com_i : ID^k_i ⊸ PTM^k_i`` runs ``δ_P`` on the state and the head
    cell and recombines the tape according to the move bit.

    The move bit is duplicated into four booleans that act as swaps at any
    type: with ``m = 0̲`` (left) the pieces come out in the order that puts
    the written cell and the nearest left cell in front of the right side,
    with ``m = 1̲`` (right) the order that pushes both onto the left side.
    A selection by ``if`` over ``a ⊸ a`` is not typable since that type has
    no eraser, hence the swaps.
    """
    qs = _tuple_vars("q", k)
    qs2 = tuple(f"{q}'" for q in qs)
    step = App(_src(dp, Arrow(bools_type(k + 1), bools_type(k + 2))),
               Tensor(tuple(map(Var, qs + ("br",)))))
    dup = If(Var("mv"), Tensor((ZERO,) * 4), Tensor((ONE,) * 4), bools_type(4))
    endo = _endo(A)
    recombine = compose(apps(Var("C1"), Var("u")), compose(apps(Var("C2"), Var("v")), Var("T")))
    body = LetTensor(apps(Ann(Var("m1"), BOOL), Var("r"), Var("l")), ("T", "O"),
           LetTensor(apps(Ann(Var("m2"), BOOL), Var("bl"), Var("b'")), ("u", "v"),
           LetTensor(apps(Ann(Var("m4"), BOOL), Var("cl"), Var("cr")), ("C1", "C2"),
           LetTensor(apps(Inst(Ann(Var("m3"), BOOL), (endo,)), Var("O"), Ann(recombine, endo)), ("L", "R"),
                     Tensor((Var("L"), Var("R"), _tuple_of(tuple(map(Var, qs2)))))))))
    body = LetTensor(dup, ("m1", "m2", "m3", "m4"), body)
    body = LetTensor(step, qs2 + ("b'", "mv"), body)
    body = _let_tuple(Var("q"), qs, body)
    return _build(lams("s !c", _open_id(Var("s"), i, k, body)), Arrow(id_type(i, k), ptm_type(i, k)))


@lru_cache(maxsize=None)
def tr_term(i: int, k: int, dp: Term) -> Encoded:
    """``tr_i = com_i ∘ decom_i : PTM^k_i ⊸ PTM^k_i``."""
    t = ptm_type(i, k)
    body = App(_a(com_term(i, k, dp)), App(_a(decom_term(i, k)), Var("m")))
    return _build(Lam("m", body), Arrow(t, t))


@lru_cache(maxsize=None)
def init_term(i: int, k: int, q0: tuple[int, ...] | str) -> Encoded:
    """``init_i = λn.λ!c. I ⊗ (λz. n !^i(d^i(c) 0̲) z) ⊗ Q0 : N_i ⊸ PTM^k_i``:
    ``n`` blank cells, head on cell 0, state ``Q0``."""
    q0 = tuple(int(b) for b in q0)
    if len(q0) != k:
        raise ValueError(f"initial state {q0} is not {k} bits wide")
    n = Ann(Var("n"), nat_type(i))
    right = Lam("z", apps(n, bangs(App(ders(Var("c"), i), ZERO), i), Var("z")))
    body = Tensor((Unit(), right, tuple_term(q0)))
    return _build(lams("n !c", body), Arrow(nat_type(i), ptm_type(i, k)))


@lru_cache(maxsize=None)
def move_right_term(i: int, k: int) -> Encoded:
    """``λs.λ!c. let s !^i(d^i(c)) be l⊗r⊗cl⊗bl⊗cr⊗br⊗q in (cr br ∘ cl bl ∘ l) ⊗ r ⊗ q``:
    moves the head one cell right without writing (``ID^k_i ⊸ PTM^k_i``)."""
    left = compose(App(Var("cr"), Var("br")), compose(App(Var("cl"), Var("bl")), Var("l")))
    body = _open_id(Var("s"), i, k, Tensor((left, Var("r"), Var("q"))))
    return _build(lams("s !c", body), Arrow(id_type(i, k), ptm_type(i, k)))


@lru_cache(maxsize=None)
def write_back_term(i: int, k: int) -> Encoded:
    """``λb.λs.λ!c. let s !^i(d^i(c)) be l⊗r⊗cl⊗bl⊗cr⊗br⊗q in
    let E_B bl be I in l ⊗ (cl b ∘ cr br ∘ r) ⊗ q``: drops the nearest left
    cell and puts ``b`` in front of the head (``B ⊸ ID^k_i ⊸ PTM^k_i``)."""
    right = compose(App(Var("cl"), Var("b")), compose(App(Var("cr"), Var("br")), Var("r")))
    inner = LetUnit(App(Ann(eraser(BOOL), Arrow(BOOL, UNIT)), Var("bl")),
                    Tensor((Var("l"), right, Var("q"))))
    body = _open_id(Var("s"), i, k, inner)
    return _build(lams("b s !c", body), Arrow(BOOL, Arrow(id_type(i, k), ptm_type(i, k))))


def _string_fold(step: Term, i: int, k: int) -> Term:
    """``λs.λm. s !(step) m`` with ``s : S`` iterated at ``PTM^k_i``."""
    s = Inst(Ann(Var("s"), string_type(1)), (ptm_type(i, k),))
    return lams("s m", apps(s, Bang(step), Var("m")))


@lru_cache(maxsize=None)
def shift_term(i: int, k: int) -> Encoded:
    """``λs.λm. s !(λb.λm'. let E_B b be I in MR (decom m')) m : S ⊸ PTM^k_i ⊸ PTM^k_i``
    moves the head ``|s|`` cells to the right."""
    step = lams("b m'", LetUnit(App(Ann(eraser(BOOL), Arrow(BOOL, UNIT)), Var("b")),
                                App(_a(move_right_term(i, k)), App(_a(decom_term(i, k)), Var("m'")))))
    t = ptm_type(i, k)
    return _build(_string_fold(step, i, k), Arrow(string_type(1), Arrow(t, t)))


@lru_cache(maxsize=None)
def in_term(i: int, k: int) -> Encoded:
    """``in_i = λs.λm. s !(λb.λm'. W b (decom m')) m : S ⊸ PTM^k_i ⊸ PTM^k_i``.

    Applied after :func:`shift_term` with the same string, it writes the
    string from cell 0 and brings the head back to cell 0.  The string is
    folded from its last symbol, each step consuming one blank cell on the
    left and prepending the symbol to the right side.
    """
    step = lams("b m'", apps(_a(write_back_term(i, k)), Var("b"),
                             App(_a(decom_term(i, k)), Var("m'"))))
    t = ptm_type(i, k)
    return _build(_string_fold(step, i, k), Arrow(string_type(1), Arrow(t, t)))


@lru_cache(maxsize=None)
def ext_s_term(i: int, k: int) -> Encoded:
    """``ext_i = λm.λ!c. let m !^i(d^i(c)) be l ⊗ r ⊗ q in let E q be I in l ∘ r``
    at ``PTM^k_i ⊸ S_i``; the head is at cell 0, so ``l`` is empty."""
    m = Ann(Var("m"), ptm_type(i, k))
    erase = App(Ann(eraser(bools_type(k)), Arrow(bools_type(k), UNIT)), Var("q"))
    body = LetTensor(App(m, bangs(ders(Var("c"), i), i)), ("l", "r", "q"),
                     LetUnit(erase, compose(Var("l"), Var("r"))))
    return _build(lams("m !c", body), Arrow(ptm_type(i, k), string_type(i)))


@lru_cache(maxsize=None)
def ext_b_term(i: int, k: int, accepting: frozenset[str]) -> Encoded:
    """``ext^B_i : PTM^k_i ⊸ B`` returns ``0̲`` on an accepting state and
    ``1̲`` otherwise.  The configuration is instantiated at ``𝟏`` with cell
    function ``λb.λu. let E_B b be I in u`` so both sides erase to ``I``."""
    m = Inst(Ann(Var("m"), ptm_type(i, k)), (UNIT,))
    cell = lams("b u", LetUnit(App(Ann(eraser(BOOL), Arrow(BOOL, UNIT)), Var("b")), Var("u")))
    qs = _tuple_vars("q", k)
    verdict = table_term(lambda w: (0 if "".join(map(str, w)) in accepting else 1,), k, 1)
    body = LetTensor(App(m, bangs(cell, i)), ("l", "r", "q"),
                     LetUnit(App(Var("l"), Unit()), LetUnit(App(Var("r"), Unit()),
                             _let_tuple(Var("q"), qs, apps(verdict, *map(Var, qs))))))
    return _build(Lam("m", body), Arrow(ptm_type(i, k), BOOL))


# ---------------------------------------------------------------------------
# compiling machines


@dataclass(frozen=True)
class Layout:
    """Index arithmetic of a compiled machine with time bound ``p`` and
    space bound ``q``: the input is banged ``bangs`` times, configurations
    live at index ``index`` and the machine runs ``p + q`` transitions."""

    p: Poly
    q: Poly

    @property
    def steps(self) -> Poly:
        return self.p + self.q

    @property
    def bangs(self) -> int:
        return max(self.p.degree, self.q.degree, 1) + 1

    @property
    def index(self) -> int:
        return poly_index(self.q)

    @property
    def steps_index(self) -> int:
        return poly_index(self.steps)


def halting_tables(spec) -> tuple[dict, dict]:
    """The machine's tables with every final state looping in place: it
    writes back the symbol it reads and moves left, which rewinds the head
    to cell 0 before extraction."""
    out = []
    for t in (spec.delta0, spec.delta1):
        t2 = {}
        for (s, b), tr in t.items():
            t2[(s, b)] = (s, b, "L") if s in spec.final else (tr.next, tr.write, tr.move)
        for s in spec.final:
            for b in (0, 1):
                t2[(s, b)] = (s, b, "L")
        out.append(t2)
    return out[0], out[1]


def _full_table(spec, t: dict) -> dict:
    # rows for unreachable k-bit states keep the table total on {0,1}^k
    k = spec.state_width
    full = {}
    for j in range(2 ** k):
        s = format(j, f"0{k}b")
        for b in (0, 1):
            full[(s, b)] = t.get((s, b), (s, b, "L"))
    return full


def delta_p_for(spec) -> Encoded:
    t0, t1 = halting_tables(spec)
    k = spec.state_width
    d0 = delta_encode(_full_table(spec, t0), k)
    d1 = delta_encode(_full_table(spec, t1), k)
    return delta_p_term(d0.term, d1.term, k)


def ptm_compile(spec, p: Poly | tuple, q: Poly | tuple, output: str = "string") -> Encoded:
    """The closed term ``λ!x. ext(T !^j(tr) (in d^D(x) (shift d^D(x) (init Q))))``
    at ``!^D S ⊸ S_{2 deg q + 1}`` (``output="string"``) or ``!^D S ⊸ B``
    (``output="verdict"``), where ``D = max(deg p, deg q, 1) + 1``.

    ``T`` and ``Q`` are the numerals of ``p + q`` and ``q`` applied to the
    input length.  The tape has ``q(n)`` cells (``q(n) ≥ n`` is required);
    the extra ``q(n)`` steps let halted runs rewind the head to cell 0.
    """
    p = p if isinstance(p, Poly) else Poly(tuple(p))
    q = q if isinstance(q, Poly) else Poly(tuple(q))
    return _compile(spec, p, q, output)


@lru_cache(maxsize=None)
def _compile(spec, p: Poly, q: Poly, output: str) -> Encoded:
    lay = Layout(p, q)
    i, k, big_d = lay.index, spec.state_width, lay.bangs
    dp = delta_p_for(spec).term
    x = ders(Var("x"), big_d)
    length = App(_a(len_term(1)), x)
    t_num = _poly_source(lay.steps, length)
    q_num = _poly_source(q, length)
    cfg = App(_a(init_term(i, k, spec.initial)), Ann(q_num, nat_type(i)))
    cfg = apps(_a(shift_term(i, k)), x, cfg)
    cfg = apps(_a(in_term(i, k)), x, cfg)
    it = Inst(Ann(t_num, nat_type(lay.steps_index)), (ptm_type(i, k),))
    run = apps(it, bangs(_a(tr_term(i, k, dp)), lay.steps_index), cfg)
    if output == "string":
        body, res = App(_a(ext_s_term(i, k)), run), string_type(i)
    elif output == "verdict":
        body, res = App(_a(ext_b_term(i, k, spec.accepting)), run), BOOL
    else:
        raise ValueError(f"unknown output kind {output!r}")
    return _build(BLam("x", body), Arrow(tbangs(string_type(1), big_d), res))


def compiled_input(s: str, p: Poly | tuple, q: Poly | tuple) -> Term:
    """``!^D s̲``, the argument of a compiled machine."""
    p = p if isinstance(p, Poly) else Poly(tuple(p))
    q = q if isinstance(q, Poly) else Poly(tuple(q))
    return bangs(string_term(s).term, Layout(p, q).bangs)
