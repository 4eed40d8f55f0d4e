#!/usr/bin/env python3
"""Success rates of each tester on the instance family it targets.

Prints one JSON summary record per (kind, algo) pair; ``--strict`` gates at
0.90 instead of 0.85 and exits 1 if any batch misses.
"""

import argparse
import json
import sys

from patfree.bench import DEFAULT_THRESHOLD, STRICT_THRESHOLD, BatchSpec, run_batch
from patfree.testers import TesterConfig

PAIRS = [("planted", "full"), ("gap1", "gap1"), ("gap2", "gap2"), ("planted12", "mono12"),
         ("avoid132", "full"), ("inc", "full"), ("dec", "mono12")]


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--n", type=int, default=4096)
    p.add_argument("--epsilon", type=float, default=0.1)
    p.add_argument("--trials", type=int, default=200)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--strict", action="store_true")
    args = p.parse_args(argv)
    threshold = STRICT_THRESHOLD if args.strict else DEFAULT_THRESHOLD
    status = 0
    for kind, algo in PAIRS:
        spec = BatchSpec(config=TesterConfig(epsilon=args.epsilon, seed=args.seed), kind=kind, n=args.n,
                         trials=args.trials, algo=algo, fresh_instances=True)
        batch = run_batch(spec)
        rec = {**batch.summary_record(), "threshold": threshold, "passed": batch.passes(threshold),
               "timing": batch.timing}
        status |= not rec["passed"]
        print(json.dumps(rec, sort_keys=True), flush=True)
    return status


if __name__ == "__main__":
    sys.exit(main())
