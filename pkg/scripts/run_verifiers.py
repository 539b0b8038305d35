#!/usr/bin/env python3
"""Run the full numerical verification suite and save a report.

    python scripts/run_verifiers.py --level full --out results/

Writes reports.jsonl and reports.csv and prints one line per check.
"""

import argparse
import os
import sys

sys.path.insert(0, os.path.join(os.path.dirname(__file__), "..", "src"))

from normpack.checks import write_reports_csv, write_reports_jsonl
from normpack.harness import verify_suite


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--level", choices=("fast", "full"), default="full")
    ap.add_argument("--seed", type=int, default=1)
    ap.add_argument("--out", default="results")
    args = ap.parse_args()

    reports = verify_suite(args.level, seed=args.seed)
    bad = 0
    for rep in reports:
        bad += rep.violations
        flag = "ok" if rep.violations == 0 and rep.conclusive else "CHECK"
        print(
            f"{rep.check:24s} {rep.body:34s} value={rep.value:<12.6g} "
            f"bound={rep.bound:<12.6g} violations={rep.violations} [{flag}]"
        )

    os.makedirs(args.out, exist_ok=True)
    write_reports_jsonl(reports, os.path.join(args.out, "reports.jsonl"))
    write_reports_csv(reports, os.path.join(args.out, "reports.csv"))
    print(f"\n{len(reports)} checks, {bad} violations; reports in {args.out}/")
    return 0 if bad == 0 else 1


if __name__ == "__main__":
    sys.exit(main())
