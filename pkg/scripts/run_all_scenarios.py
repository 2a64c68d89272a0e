"""Run every bundled scenario and print one status line per scenario."""
import argparse
import sys
import time
from pathlib import Path

from finslerlab.cli import run_scenario
from finslerlab.config import bundled_scenarios

STATUS = {0: "ok", 1: "error", 2: "red flag"}
SEVERITY = {0: 0, 2: 1, 1: 2}


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default="out", help="parent directory for scenario outputs")
    ap.add_argument("--threads", type=int, default=1)
    args = ap.parse_args()
    worst = 0
    for name in bundled_scenarios():
        t0 = time.perf_counter()
        code = run_scenario(name, out=Path(args.out) / name, threads=args.threads)
        print(f"{name:20s} {STATUS[code]:8s} {time.perf_counter() - t0:6.1f} s")
        worst = max(worst, code, key=SEVERITY.get)
    return worst


if __name__ == "__main__":
    sys.exit(main())
