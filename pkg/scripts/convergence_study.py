"""Run every study configuration through the CLI and print one status line each.

Usage: python scripts/convergence_study.py [--out results/studies] [--seed N]
"""

import argparse
import sys
from pathlib import Path

from hsriccati.cli import main

ROOT = Path(__file__).resolve().parents[1]


def run(out: Path, seed=None) -> int:
    worst = 0
    for cfg in sorted((ROOT / "configs").glob("study_*.json")):
        argv = ["study", "--config", str(cfg), "--out", str(out / cfg.stem)]
        if seed is not None:
            argv += ["--seed", str(seed)]
        code = main(argv)
        print(f"{cfg.stem:24s} exit={code}")
        worst = max(worst, code)
    return worst


if __name__ == "__main__":
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", type=Path, default=Path("results/studies"))
    ap.add_argument("--seed", type=int, default=None)
    a = ap.parse_args()
    sys.exit(run(a.out, a.seed))
