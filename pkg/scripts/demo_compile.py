"""Compile a sample machine and compare the term with the exact simulator.

    python scripts/demo_compile.py coin-writer --max-len 2
"""

from __future__ import annotations

import argparse
import itertools
import time

from psta.cli import compare_one
from psta.encodings import Layout, ptm_compile
from psta.machines import SAMPLES


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("machine", choices=sorted(SAMPLES))
    ap.add_argument("--max-len", type=int, default=2)
    args = ap.parse_args()

    s = SAMPLES[args.machine]()
    enc = ptm_compile(s.spec, s.p, s.q)
    print(f"{s.name}: time {s.p}, space {s.q}, term size {enc.term.size}, "
          f"input under {Layout(s.p, s.q).bangs} bangs")
    for n in range(args.max_len + 1):
        for bits in itertools.product("01", repeat=n):
            x = "".join(bits)
            t0 = time.perf_counter()
            r = compare_one(s.spec, x, s.p, s.q)
            tapes = ", ".join(f"{k}:{v}" for k, v in sorted(r["term_tapes"].items()))
            print(f"{x!r:6} {'equal' if r['equal'] else 'DIFFERENT':9} {tapes}  "
                  f"({time.perf_counter() - t0:.1f}s)")


if __name__ == "__main__":
    main()
