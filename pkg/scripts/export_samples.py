"""Write the sample machines as JSON specs into ``samples/``."""

from __future__ import annotations

import argparse
from pathlib import Path

from psta.machines import SAMPLES

ROOT = Path(__file__).resolve().parent.parent


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", type=Path, default=ROOT / "samples")
    args = ap.parse_args()
    args.out.mkdir(parents=True, exist_ok=True)
    for name, make in SAMPLES.items():
        s = make()
        path = args.out / (name.replace("-", "_") + ".json")
        path.write_text(s.spec.dumps() + "\n")
        print(f"{path}  time {s.p}  space {s.q}")


if __name__ == "__main__":
    main()
