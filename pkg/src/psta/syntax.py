"""Concrete syntax: terms, types, derivation JSON and distribution JSON.

Terms use an ASCII grammar (``λ`` and ``⊸``-style Unicode is accepted on
input as well)::

    term  := "\\" binder+ "." term | "let" term "be" names "in" term
           | "if" term "then" term "else" term | app ("*" app)*
    binder:= ident | "!" ident
    app   := atom+
    atom  := ident | "I" | "!" atom | "d(" term ")" | "<" term "," term ">"
           | "proj(" term ")"
           | "copy^{" term "}" term "as" ident "," ident "in" "<" term "," term ">"
           | "(" term ")"

``names`` is ``I`` or ``x1 * … * xn`` (a name may carry ``!``).  Types::

    type  := ("forall" | "∀") ident "." type | with (("-o" | "⊸") type)?
    with  := prefix ("&" prefix)*
    prefix:= "!" prefix | ident | "(" type ")"
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass
from fractions import Fraction
from typing import Any

from .derivations import Derivation, DerivationError, Judgment, _check_node
from .ptypes import Arrow, Forall, TBang, TVar, Type, With, show_type
from .sugar import If, LetTensor, LetUnit, Tensor, Unit, elaborate
from .terms import (
    App, BLam, Bang, Copy, Der, Lam, Pair, Proj, Term, Var, s_linearity_violation, show,
)
__all__ = [
    "Span", "ParseError", "SchemaError", "parse_term", "parse_type", "print_term",
    "format_distribution", "parse_distribution", "derivation_to_json",
    "parse_derivation", "check_with_paths", "parse_ptm",
]


@dataclass(frozen=True)
class Span:
    start: int
    end: int
    line: int
    col: int

    def __str__(self):
        return f"{self.line}:{self.col}"


class ParseError(ValueError):
    def __init__(self, msg: str, span: Span):
        super().__init__(f"{span}: {msg}")
        self.msg = msg
        self.span = span


class SchemaError(ValueError):
    """A malformed or ill-typed JSON document; ``path`` locates the culprit."""

    def __init__(self, msg: str, path: str, code: str = "schema"):
        super().__init__(f"{path}: {msg}")
        self.msg = msg
        self.path = path
        self.code = code


# ---------------------------------------------------------------------------
# lexer

_TOKEN = re.compile(r"""
    (?P<ws>\s+|\#[^\n]*)
  | (?P<copy>copy\^\{)
  | (?P<der>d\()
  | (?P<proj>proj\()
  | (?P<arrow>-o|⊸)
  | (?P<ident>[A-Za-z_][A-Za-z0-9_']*)
  | (?P<sym>[\\λ.!()<>,*&}∀])
""", re.VERBOSE)

KEYWORDS = {"let", "be", "in", "if", "then", "else", "as", "forall"}


@dataclass(frozen=True)
class _Tok:
    kind: str
    text: str
    span: Span


def _lex(text: str) -> list[_Tok]:
    out = []
    pos, line, line_start = 0, 1, 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None:
            raise ParseError(f"unexpected character {text[pos]!r}",
                             Span(pos, pos + 1, line, pos - line_start + 1))
        kind = m.lastgroup
        tok = m.group()
        span = Span(pos, m.end(), line, pos - line_start + 1)
        if kind != "ws":
            if kind == "ident" and tok in KEYWORDS:
                kind = tok
            elif kind == "sym":
                kind = {"λ": "\\", "∀": "forall"}.get(tok, tok)
            out.append(_Tok(kind, tok, span))
        for i, ch in enumerate(tok):
            if ch == "\n":
                line += 1
                line_start = pos + i + 1
        pos = m.end()
    out.append(_Tok("eof", "", Span(pos, pos, line, pos - line_start + 1)))
    return out


class _Parser:
    def __init__(self, text: str, strict: bool = False):
        self.toks = _lex(text)
        self.i = 0
        self.strict = strict
        self.binders: list[tuple[str, Span]] = []

    @property
    def tok(self) -> _Tok:
        return self.toks[self.i]

    def next(self) -> _Tok:
        t = self.toks[self.i]
        self.i += 1
        return t

    def expect(self, kind: str, what: str | None = None) -> _Tok:
        if self.tok.kind != kind:
            found = self.tok.text or "end of input"
            raise ParseError(f"expected {what or repr(kind)}, found {found!r}", self.tok.span)
        return self.next()

    def ident(self) -> _Tok:
        return self.expect("ident", "an identifier")

    def done(self) -> None:
        if self.tok.kind != "eof":
            raise ParseError(f"unexpected {self.tok.text!r}", self.tok.span)

    # -- terms ------------------------------------------------------------

    def term(self) -> Term:
        k = self.tok.kind
        if k == "\\":
            return self.lam()
        if k == "let":
            return self.let()
        if k == "if":
            self.next()
            c = self.term()
            self.expect("then")
            a = self.term()
            self.expect("else")
            b = self.term()
            return If(c, a, b)
        items = [self.app()]
        while self.tok.kind == "*":
            self.next()
            items.append(self.app())
        return items[0] if len(items) == 1 else Tensor(tuple(items))

    def lam(self) -> Term:
        self.expect("\\")
        binders: list[tuple[bool, _Tok]] = []
        while self.tok.kind in ("ident", "!"):
            bang = self.tok.kind == "!"
            if bang:
                self.next()
            binders.append((bang, self.ident()))
        if not binders:
            raise ParseError("expected a binder", self.tok.span)
        self.expect(".")
        body = self.term()
        for bang, tok in reversed(binders):
            body = self._build(lambda: (BLam if bang else Lam)(tok.text, body), tok.span)
        return body

    def let(self) -> Term:
        self.expect("let")
        scrut = self.term()
        self.expect("be")
        if self.tok.kind == "ident" and self.tok.text == "I":
            self.next()
            self.expect("in")
            return LetUnit(scrut, self.term())
        names = [self._let_name()]
        while self.tok.kind == "*":
            self.next()
            names.append(self._let_name())
        self.expect("in")
        body = self.term()
        return self._build(lambda: LetTensor(scrut, tuple(n for n, _ in names), body), names[0][1])

    def _let_name(self) -> tuple[str, Span]:
        bang = ""
        if self.tok.kind == "!":
            self.next()
            bang = "!"
        t = self.ident()
        return bang + t.text, t.span

    def app(self) -> Term:
        t = self.atom()
        while self.tok.kind in ("ident", "!", "der", "<", "proj", "copy", "("):
            t = App(t, self.atom())
        return t

    def atom(self) -> Term:
        t = self.tok
        k = t.kind
        if k == "ident":
            self.next()
            return Unit() if t.text == "I" else Var(t.text)
        if k == "!":
            self.next()
            return Bang(self.atom())
        if k == "der":
            self.next()
            body = self.term()
            self.expect(")")
            return Der(body)
        if k == "<":
            self.next()
            a = self.term()
            self.expect(",")
            b = self.term()
            self.expect(">")
            return Pair(a, b)
        if k == "proj":
            self.next()
            body = self.term()
            self.expect(")")
            return Proj(body)
        if k == "copy":
            self.next()
            bound = self.term()
            self.expect("}")
            scrut = self.term()
            self.expect("as")
            x = self.ident()
            self.expect(",")
            y = self.ident()
            self.expect("in")
            self.expect("<")
            a = self.term()
            self.expect(",")
            b = self.term()
            self.expect(">")
            return self._build(lambda: Copy(bound, scrut, x.text, y.text, a, b), x.span)
        if k == "(":
            self.next()
            body = self.term()
            self.expect(")")
            return body
        raise ParseError(f"expected a term, found {t.text or 'end of input'!r}", t.span)

    def _build(self, mk, span: Span) -> Term:
        t = mk()
        for names in (t.binds(i) for i in range(len(t.children()))):
            self.binders.extend((n, span) for n in names)
        return t

    def check_linear(self, t: Term) -> None:
        err = s_linearity_violation(elaborate(t))
        if err is not None:
            span = next((sp for n, sp in self.binders if n == err.binder), self.toks[0].span)
            raise ParseError(str(err), span)

    # -- types ------------------------------------------------------------

    def type(self) -> Type:
        if self.tok.kind == "forall":
            self.next()
            v = self.ident()
            self.expect(".")
            return Forall(v.text, self.type())
        left = self.with_()
        if self.tok.kind == "arrow":
            self.next()
            return Arrow(left, self.type())
        return left

    def with_(self) -> Type:
        t = self.prefix()
        while self.tok.kind == "&":
            self.next()
            t = With(t, self.prefix())
        return t

    def prefix(self) -> Type:
        if self.tok.kind == "!":
            self.next()
            return TBang(self.prefix())
        if self.tok.kind == "(":
            self.next()
            t = self.type()
            self.expect(")")
            return t
        return TVar(self.ident().text)


def parse_term(text: str, strict: bool = False) -> Term:
    """Parse a (possibly sugared) raw term; raises :class:`ParseError` with a
    span.  With ``strict`` the term must also be s-linear (a member of Λ!⊕)
    and a violation is reported at the offending binder."""
    p = _Parser(text, strict)
    t = p.term()
    p.done()
    if strict:
        p.check_linear(t)
    return t


def parse_type(text: str) -> Type:
    p = _Parser(text)
    try:
        t = p.type()
    except ValueError as e:
        if isinstance(e, ParseError):
            raise
        raise ParseError(str(e), p.tok.span) from None
    p.done()
    return t


def print_term(t: Term, unicode: bool = False) -> str:
    return show(t, unicode)


# ---------------------------------------------------------------------------
# distributions


def format_distribution(dist) -> list[dict[str, str]]:
    """``[{"term": text, "prob": "n/d"}]`` sorted by descending probability,
    then by term text."""
    rows = [(dist.prob(t), show(t)) for t in dist.support()]
    rows.sort(key=lambda r: (-r[0], r[1]))
    return [{"term": s, "prob": f"{p.numerator}/{p.denominator}"} for p, s in rows]


def parse_distribution(rows: list[dict[str, str]]) -> dict[str, Fraction]:
    return {r["term"]: Fraction(r["prob"]) for r in rows}


# ---------------------------------------------------------------------------
# derivations


def derivation_to_json(d: Derivation) -> dict[str, Any]:
    c = d.conclusion
    out: dict[str, Any] = {
        "rule": d.rule,
        "context": [[x, show_type(t, unicode=False)] for x, t in c.context],
        "subject": show(c.subject),
        "type": show_type(c.type, unicode=False),
    }
    p = d.payload
    if d.rule == "sp":
        out["payload"] = [list(pair) for pair in p]
    elif d.rule == "m":
        out["payload"] = {"names": list(p[0]), "var": p[1]}
    elif d.rule == "forallI":
        out["payload"] = list(p)
    elif d.rule == "forallE":
        out["payload"] = show_type(p, unicode=False)
    elif p is not None:
        out["payload"] = p
    out["premises"] = [derivation_to_json(q) for q in d.premises]
    return out


def parse_derivation(data: dict | str, path: str = "$") -> Derivation:
    """Rebuild a derivation from JSON.  Only the shape is checked here; use
    :func:`check_with_paths` to validate the rules."""
    if isinstance(data, str):
        data = json.loads(data)
    if not isinstance(data, dict):
        raise SchemaError("expected an object", path)

    def field(key: str, kind=None):
        if key not in data:
            raise SchemaError(f"missing field {key!r}", path)
        v = data[key]
        if kind is not None and not isinstance(v, kind):
            raise SchemaError(f"field {key!r} has the wrong shape", f"{path}.{key}")
        return v

    def text(parse, key: str, value: str):
        try:
            return parse(value)
        except (ParseError, ValueError) as e:
            raise SchemaError(str(e), f"{path}.{key}") from None

    rule = field("rule", str)
    ctx = []
    for j, entry in enumerate(field("context", list)):
        if not (isinstance(entry, list) and len(entry) == 2 and isinstance(entry[0], str)):
            raise SchemaError("expected [name, type]", f"{path}.context[{j}]")
        ctx.append((entry[0], text(parse_type, f"context[{j}]", entry[1])))
    subject = text(parse_term, "subject", field("subject", str))
    subject = elaborate(subject)
    ty = text(parse_type, "type", field("type", str))
    prems = tuple(parse_derivation(q, f"{path}.premises[{j}]")
                  for j, q in enumerate(field("premises", list)))
    raw = data.get("payload")
    try:
        if rule == "sp":
            payload = tuple((a, b) for a, b in raw)
        elif rule == "m":
            payload = (tuple(raw["names"]), raw["var"])
        elif rule == "forallI":
            payload = (raw[0], raw[1])
        elif rule == "forallE":
            payload = parse_type(raw)
        else:
            payload = raw
    except (TypeError, KeyError, IndexError, ValueError) as e:
        raise SchemaError(f"bad payload for {rule}: {e}", f"{path}.payload") from None
    return Derivation(rule, prems, Judgment(tuple(ctx), subject, ty), payload)


def check_with_paths(d: Derivation, path: str = "$") -> Judgment:
    """Check every node; failures become :class:`SchemaError` citing the
    JSON path of the offending node."""
    stack = [(d, path)]
    while stack:
        n, p = stack.pop()
        try:
            _check_node(n)
        except DerivationError as e:
            raise SchemaError(str(e), p, code=e.code) from None
        stack.extend((q, f"{p}.premises[{j}]") for j, q in enumerate(n.premises))
    return d.conclusion


def parse_ptm(data: dict | str):
    from .ptm import PtmError, PtmSpec

    try:
        return PtmSpec.loads(data) if isinstance(data, str) else PtmSpec.from_json(data)
    except PtmError as e:
        msg = str(e)
        where = msg.split(":", 2)[1].strip() if msg.count(":") >= 2 and "$" in msg else "$"
        raise SchemaError(msg, where if where.startswith("$") else "$", code=e.code) from None
