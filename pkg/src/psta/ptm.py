"""Probabilistic Turing machines and an exact simulator.

A machine superposes two total deterministic transition tables; every step
picks one of them with probability ½.  The simulator enumerates all coin
sequences, merging identical configurations as it goes, and returns exact
rational distributions over final tapes and over verdicts.

Conventions shared with the compiler in :mod:`psta.encodings`: the tape is
binary and has an explicit length, the input is written from cell 0 and
padded with zeros, the head starts at cell 0, a left move at cell 0 leaves
the head in place, and a right move off the last cell is a tape overflow.
Accepting and rejecting states are absorbing.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Mapping

__all__ = [
    "PtmError", "Transition", "PtmSpec", "OutputDistribution", "ptm_run",
    "ptm_step", "recognizes_with_error", "accepts_by_majority", "ACCEPT", "REJECT",
]

ACCEPT = "accept"
REJECT = "reject"


class PtmError(ValueError):
    """Carries a stable machine-readable ``code``."""

    def __init__(self, code: str, message: str):
        super().__init__(f"{code}: {message}")
        self.code = code


@dataclass(frozen=True)
class Transition:
    next: str
    write: int
    move: str  # "L" or "R"


Table = Mapping[tuple[str, int], Transition]


@dataclass(frozen=True, eq=False)
class PtmSpec:
    state_width: int
    initial: str
    accepting: frozenset[str]
    rejecting: frozenset[str]
    delta0: Mapping[tuple[str, int], Transition]
    delta1: Mapping[tuple[str, int], Transition]

    def __post_init__(self):
        object.__setattr__(self, "accepting", frozenset(self.accepting))
        object.__setattr__(self, "rejecting", frozenset(self.rejecting))
        object.__setattr__(self, "delta0", dict(self.delta0))
        object.__setattr__(self, "delta1", dict(self.delta1))
        self.validate()

    def _canon(self) -> str:
        return json.dumps(self.to_json(), sort_keys=True)

    def __eq__(self, other):
        return isinstance(other, PtmSpec) and self._canon() == other._canon()

    def __hash__(self):
        return hash(self._canon())

    @property
    def states(self) -> frozenset[str]:
        out = {self.initial} | self.accepting | self.rejecting
        for t in (self.delta0, self.delta1):
            for (s, _), tr in t.items():
                out |= {s, tr.next}
        return frozenset(out)

    @property
    def final(self) -> frozenset[str]:
        return self.accepting | self.rejecting

    def validate(self) -> None:
        k = self.state_width
        if k < 1:
            raise PtmError("bad-spec", "state width must be positive")
        if self.accepting & self.rejecting:
            raise PtmError("bad-spec", "a state is both accepting and rejecting")
        for s in self.states:
            if len(s) != k or any(ch not in "01" for ch in s):
                raise PtmError("bad-spec", f"state {s!r} is not a {k}-bit string")
        for name, t in (("delta0", self.delta0), ("delta1", self.delta1)):
            for tr in t.values():
                if tr.write not in (0, 1) or tr.move not in ("L", "R"):
                    raise PtmError("bad-spec", f"{name}: bad transition {tr}")
            for s in self.states:
                for b in (0, 1):
                    if (s, b) not in t:
                        raise PtmError("non-total-table", f"{name} has no entry for state {s} reading {b}")

    def table(self, coin: int) -> Table:
        return self.delta1 if coin else self.delta0

    def is_deterministic(self) -> bool:
        return self.delta0 == self.delta1

    # -- JSON -------------------------------------------------------------

    def to_json(self) -> dict:
        def rows(t: Table) -> list[dict]:
            return [{"state": s, "read": b, "next": tr.next, "write": tr.write, "move": tr.move}
                    for (s, b), tr in sorted(t.items())]

        return {
            "state_width": self.state_width,
            "initial": self.initial,
            "accepting": sorted(self.accepting),
            "rejecting": sorted(self.rejecting),
            "delta0": rows(self.delta0),
            "delta1": rows(self.delta1),
        }

    def dumps(self) -> str:
        return json.dumps(self.to_json(), indent=2)

    @classmethod
    def from_json(cls, data: dict) -> "PtmSpec":
        def req(obj: dict, key: str, path: str):
            if not isinstance(obj, dict) or key not in obj:
                raise PtmError("schema", f"{path}: missing field {key!r}")
            return obj[key]

        def rows(key: str) -> dict:
            items = req(data, key, "$")
            if not isinstance(items, list):
                raise PtmError("schema", f"$.{key}: expected a list")
            out = {}
            for i, r in enumerate(items):
                p = f"$.{key}[{i}]"
                s, b = req(r, "state", p), req(r, "read", p)
                if (s, b) in out:
                    raise PtmError("schema", f"{p}: duplicate entry for ({s}, {b})")
                out[(s, b)] = Transition(req(r, "next", p), req(r, "write", p), req(r, "move", p))
            return out

        return cls(
            state_width=req(data, "state_width", "$"),
            initial=req(data, "initial", "$"),
            accepting=frozenset(req(data, "accepting", "$")),
            rejecting=frozenset(req(data, "rejecting", "$")),
            delta0=rows("delta0"),
            delta1=rows("delta1"),
        )

    @classmethod
    def loads(cls, text: str) -> "PtmSpec":
        return cls.from_json(json.loads(text))

    @classmethod
    def from_functions(cls, k: int, initial: str, accepting: Iterable[str], rejecting: Iterable[str],
                       f0, f1=None, states: Iterable[str] | None = None) -> "PtmSpec":
        """Build the tables from Python functions ``(state, bit) -> (next, write, move)``
        over all ``k``-bit states (or over ``states``)."""
        f1 = f1 or f0
        all_states = list(states) if states is not None else [
            format(i, f"0{k}b") for i in range(2 ** k)]
        t0 = {(s, b): Transition(*f0(s, b)) for s in all_states for b in (0, 1)}
        t1 = {(s, b): Transition(*f1(s, b)) for s in all_states for b in (0, 1)}
        return cls(k, initial, frozenset(accepting), frozenset(rejecting), t0, t1)


@dataclass
class OutputDistribution:
    """Exact distributions of the final tape and of the verdict."""

    tapes: dict[str, Fraction] = field(default_factory=dict)
    verdicts: dict[str, Fraction] = field(default_factory=dict)
    steps: int = 0
    configurations: int = 0  # size of the largest merged frontier

    def mass(self) -> Fraction:
        return sum(self.tapes.values(), Fraction(0))


Config = tuple[str, int, tuple[int, ...]]


def ptm_step(spec: PtmSpec, config: Config, coin: int) -> Config:
    """One transition of the chosen table; final states are absorbing."""
    state, head, tape = config
    if state in spec.final:
        return config
    tr = spec.table(coin)[(state, tape[head])]
    tape = tape[:head] + (tr.write,) + tape[head + 1:]
    if tr.move == "R":
        if head + 1 >= len(tape):
            raise PtmError("tape-overflow", f"head leaves the tape of length {len(tape)} on the right")
        head += 1
    elif head > 0:
        head -= 1
    return (tr.next, head, tape)


def ptm_run(spec: PtmSpec, input: str, steps: int, tape_len: int) -> OutputDistribution:
    """Run ``steps`` transitions from the initial configuration on ``input``."""
    if any(ch not in "01" for ch in input):
        raise PtmError("bad-input", f"not a bit string: {input!r}")
    if tape_len < len(input) or tape_len < 1:
        raise PtmError("tape-overflow", f"tape length {tape_len} cannot hold the input")
    if steps < 0:
        raise PtmError("bad-input", "negative step count")
    tape = tuple(int(ch) for ch in input) + (0,) * (tape_len - len(input))
    frontier: dict[Config, Fraction] = {(spec.initial, 0, tape): Fraction(1)}
    widest = 1
    half = Fraction(1, 2)
    for _ in range(steps):
        nxt: dict[Config, Fraction] = {}
        for c, p in frontier.items():
            if c[0] in spec.final:
                nxt[c] = nxt.get(c, 0) + p
                continue
            for coin in (0, 1):
                c2 = ptm_step(spec, c, coin)
                nxt[c2] = nxt.get(c2, 0) + p * half
        frontier = nxt
        widest = max(widest, len(frontier))
    out = OutputDistribution(steps=steps, configurations=widest)
    for (state, _, tp), p in frontier.items():
        if state not in spec.final:
            raise PtmError("unhalted-path", f"a path is still in state {state} after {steps} steps")
        s = "".join(map(str, tp))
        out.tapes[s] = out.tapes.get(s, 0) + p
        v = ACCEPT if state in spec.accepting else REJECT
        out.verdicts[v] = out.verdicts.get(v, 0) + p
    return out


def _accept_mass(dist: Mapping[str, Fraction]) -> tuple[Fraction, Fraction]:
    acc = Fraction(dist.get(ACCEPT, 0))
    rej = Fraction(dist.get(REJECT, 0))
    return acc, rej


def recognizes_with_error(results: Mapping[str, Mapping[str, Fraction]],
                          membership: Mapping[str, bool], eps: Fraction | str | float) -> bool:
    """Accept mass at least ``1 - eps`` on members and reject mass at least
    ``1 - eps`` on non-members, compared exactly."""
    eps = Fraction(eps)
    if not 0 <= eps <= 1:
        raise ValueError("the error bound lies in [0, 1]")
    for x, dist in results.items():
        acc, rej = _accept_mass(dist)
        if membership[x] and acc < 1 - eps:
            return False
        if not membership[x] and rej < 1 - eps:
            return False
    return True


def accepts_by_majority(results: Mapping[str, Mapping[str, Fraction]],
                        membership: Mapping[str, bool]) -> bool:
    """Members accepted with probability at least that of rejection and
    non-members rejected likewise; ties satisfy both clauses."""
    for x, dist in results.items():
        acc, rej = _accept_mass(dist)
        if membership[x] and acc < rej:
            return False
        if not membership[x] and rej < acc:
            return False
    return True
