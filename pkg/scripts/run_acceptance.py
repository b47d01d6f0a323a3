"""Run the acceptance suite and print one status line per criterion.

    python scripts/run_acceptance.py [-k EXPR]
"""

from __future__ import annotations

import sys
from pathlib import Path

import pytest

ROOT = Path(__file__).resolve().parent.parent

if __name__ == "__main__":
    args = [str(ROOT / "tests" / "test_acceptance.py"), "-q", "-s", "-p", "no:cacheprovider"]
    sys.exit(pytest.main(args + sys.argv[1:]))
