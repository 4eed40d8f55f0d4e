#!/usr/bin/env python3
"""Median query counts of the full tester over a grid of lengths.

    python scripts/run_scaling.py --out scaling.csv
"""

import argparse
import csv
import sys

from patfree.bench import SCHEMA_VERSION, scaling_experiment
from patfree.testers import TesterConfig


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--ns", default=",".join(str(2 ** e) for e in range(10, 21, 2)))
    p.add_argument("--epsilon", type=float, default=0.1)
    p.add_argument("--trials", type=int, default=50)
    p.add_argument("--kind", default="planted")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", help="CSV path (default: stdout)")
    args = p.parse_args(argv)
    ns = [int(x) for x in args.ns.split(",")]
    rows = scaling_experiment(ns, args.epsilon, args.trials, args.kind,
                              TesterConfig(epsilon=args.epsilon, seed=args.seed), seed=args.seed)
    fh = open(args.out, "w", newline="") if args.out else sys.stdout
    w = csv.DictWriter(fh, fieldnames=["schema_version", *rows[0]] if rows else ["schema_version"])
    w.writeheader()
    for r in rows:
        w.writerow({"schema_version": SCHEMA_VERSION, **r})
        fh.flush()
    if rows:
        base = rows[0]["median_total"]
        for r in rows:
            print(f"n={r['n']:>8}  median={r['median_total']:>12.0f}  ratio={r['median_total'] / base:6.2f}  "
                  f"success={r['success_rate']:.3f}", file=sys.stderr)


if __name__ == "__main__":
    main()
