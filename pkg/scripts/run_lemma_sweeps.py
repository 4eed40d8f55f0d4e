#!/usr/bin/env python3
"""Run every lemma sweep with its acceptance-size corpus and print one JSON line each.

Exits 1 on the first violation, printing the serialized counterexample.
"""

import json
import sys
import time

from patfree.bench import LEMMAS, LemmaViolation, lemma_sweep


def main():
    status = 0
    for which in LEMMAS:
        t0 = time.perf_counter()
        try:
            rec = lemma_sweep(which).to_dict()
        except LemmaViolation as exc:
            print(json.dumps({"which": exc.which, "counterexample": exc.counterexample}), file=sys.stderr)
            status = 1
            continue
        rec["seconds"] = round(time.perf_counter() - t0, 1)
        print(json.dumps(rec, sort_keys=True), flush=True)
    return status


if __name__ == "__main__":
    sys.exit(main())
