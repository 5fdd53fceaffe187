"""Run the acceptance suite and print its per-criterion PASS/FAIL lines.

Usage: python scripts/run_acceptance.py
"""

import sys
from pathlib import Path

import pytest

ROOT = Path(__file__).resolve().parents[1]

if __name__ == "__main__":
    sys.exit(pytest.main(["-s", "-q", str(ROOT / "tests" / "test_acceptance.py")]))
