"""Copies spent by the Bell stages of all-Pauli learning as n grows, at fixed eps.

usage: python scripts/bell_stage_scaling.py [--eps 0.4] [--seed 0] [--out bell.csv]
"""

import argparse
import csv
import math
import sys

from shadowtomo.acceptance import bell_stage_ledger, loglog_slope


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--eps", type=float, default=0.4)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--ns", type=int, nargs="+", default=[2, 3, 4, 5])
    ap.add_argument("--out", default=None)
    args = ap.parse_args()

    ledger = bell_stage_ledger(args.ns, args.eps, args.seed)
    rows = [(n, c, c / (n * math.log(n))) for n, c in sorted(ledger.items())]
    fh = open(args.out, "w", newline="") if args.out else sys.stdout
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(["n", "bell_copies", "copies_over_nlogn"])
    w.writerows(rows)
    print(f"# log-log slope {loglog_slope(ledger):.3f}", file=sys.stderr)


if __name__ == "__main__":
    main()
