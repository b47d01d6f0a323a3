"""Small sample machines with time and space bounds that hold on every input.

Each entry gives the machine, its time bound ``p``, its space bound ``q``
(the tape length, at least the input length) and, for acceptors, the
language it decides.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

from .encodings import Poly
from .ptm import PtmSpec

__all__ = ["Sample", "coin_writer", "copier", "random_walk", "biased_acceptor", "SAMPLES"]


@dataclass(frozen=True)
class Sample:
    name: str
    spec: PtmSpec
    p: Poly
    q: Poly
    member: Callable[[str], bool] | None = None


def coin_writer() -> Sample:
    """Writes a fair coin on cell 0 and accepts."""
    spec = PtmSpec.from_functions(
        1, "0", ["1"], [],
        lambda s, b: ("1", 0, "L"),
        lambda s, b: ("1", 1, "L"))
    return Sample("coin-writer", spec, Poly((1,)), Poly((1, 1)), lambda x: True)


def copier() -> Sample:
    """Deterministic: copies cell 0 into cell 1, then accepts."""

    def f(s: str, b: int):
        if s == "00":
            return ("01" if b == 0 else "10", b, "R")
        if s == "01":
            return ("11", 0, "L")
        if s == "10":
            return ("11", 1, "L")
        return ("11", b, "L")

    spec = PtmSpec.from_functions(2, "00", ["11"], [], f, f)
    return Sample("copier", spec, Poly((2,)), Poly((2, 1)), lambda x: True)


def random_walk() -> Sample:
    """Two walking states: each step writes the coin and moves right on 1,
    left on 0.  The second coin also picks the verdict (0 accepts)."""

    def f(c: int):
        def g(s: str, b: int):
            move = "R" if c else "L"
            if s == "00":
                return ("01", c, move)
            if s == "01":
                return ("11" if c else "10", c ^ b, move)
            return (s, b, "L")
        return g

    spec = PtmSpec.from_functions(2, "00", ["10"], ["11"], f(0), f(1))
    return Sample("random-walk", spec, Poly((2,)), Poly((3, 1)), lambda x: True)


def biased_acceptor() -> Sample:
    """Accepts strings starting with 1 with probability ¾ and rejects the
    others with probability ¾, using up to two coins."""

    def f(c: int):
        def g(s: str, b: int):
            yes, no = ("10", "11") if b else ("11", "10")
            if s == "00":
                return (yes, b, "L") if c == 0 else ("01", b, "L")
            if s == "01":
                return (yes if c == 0 else no, b, "L")
            return (s, b, "L")
        return g

    spec = PtmSpec.from_functions(2, "00", ["10"], ["11"], f(0), f(1))
    return Sample("biased-acceptor", spec, Poly((2,)), Poly((1, 1)), lambda x: x.startswith("1"))


SAMPLES: dict[str, Callable[[], Sample]] = {
    "coin-writer": coin_writer,
    "copier": copier,
    "random-walk": random_walk,
    "biased-acceptor": biased_acceptor,
}
