"""Command-line entry point: ``patfree {generate,test,oracle,bench,verify}``.

Exit status: 0 success, 1 verified violation (invalid witness, lemma
counterexample, failed success threshold), 2 usage or input error.
Data goes to stdout or ``--out``; diagnostics go to stderr.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
from typing import Optional

from . import __version__
from .bench import (
    DEFAULT_THRESHOLD,
    LEMMAS,
    SCHEMA_VERSION,
    STRICT_THRESHOLD,
    BatchSpec,
    LemmaViolation,
    lemma_sweep,
    meets_threshold,
    run_batch,
    scaling_experiment,
    trial_seed,
)
from .core import (
    P132,
    Interval,
    PatternSpec,
    UsageError,
    Witness,
    format_sequence,
    read_sequence,
)
from .exact_oracle import (
    EXACT_DISTANCE_MAX_N,
    classify_gaps,
    cumulative_densities,
    density_profile,
    distance_bounds,
    exact_distance_to_free,
    find_pattern_exhaustive,
    gamma_deserted_indices,
    greedy_disjoint_tuples_lr,
    greedy_disjoint_tuples_plus,
)
from .generators import KINDS, make_instance, parse_gen_spec
from .testers import ALGOS, TesterConfig

ORACLE_OPS = ("find", "disjoint-lr", "disjoint-plus", "gaps", "density", "deserted", "distance", "bounds")
SEED_ENV = "PATFREE_SEED"


class CliError(Exception):
    """Usage problem detected after parsing; exits with status 2."""


def _default_seed() -> int:
    raw = os.environ.get(SEED_ENV)
    if raw is None or raw.strip() == "":
        return 0
    try:
        return int(raw, 0)
    except ValueError:
        raise CliError(f"{SEED_ENV}={raw!r} is not an integer") from None


def _common(p: argparse.ArgumentParser, suppress: bool) -> None:
    d = argparse.SUPPRESS if suppress else None
    p.add_argument("--seed", type=lambda s: int(s, 0), default=d,
                   help=f"64-bit seed (default: ${SEED_ENV} or 0)")
    p.add_argument("--format", choices=("json", "csv", "text"), default=d if suppress else "json")
    p.add_argument("--quiet", action="store_true", default=d if suppress else False)


def _tester_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--epsilon", type=float, default=0.1)
    p.add_argument("--algo", choices=ALGOS, default="full")
    p.add_argument("--c-outer", type=int, default=20)
    p.add_argument("--c-sample", type=int, default=20)
    p.add_argument("--c-fc", type=int, default=20)
    p.add_argument("--c-bs", type=int, default=3)
    p.add_argument("--fc-direction", choices=("12", "21"), default="12")
    p.add_argument("--strict-pseudocode", action="store_true",
                   help="stop the gap-2 tester at its first failed binary search")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="patfree", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"patfree {__version__}")
    _common(parser, suppress=False)
    sub = parser.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="write a generated instance and its metadata")
    _common(g, suppress=True)
    g.add_argument("--kind", choices=KINDS, required=True)
    g.add_argument("--n", type=int, required=True)
    g.add_argument("--epsilon", type=float, default=0.1)
    g.add_argument("--out", help="sequence file; metadata goes to OUT.json")

    t = sub.add_parser("test", help="run a tester on a file or generated instance")
    _common(t, suppress=True)
    t.add_argument("--input")
    t.add_argument("--gen", help="generator spec such as planted:n=4096,eps=0.1")
    t.add_argument("--trials", type=int, default=1)
    t.add_argument("--budget", type=int, help="query cap per trial")
    t.add_argument("--out")
    _tester_flags(t)

    o = sub.add_parser("oracle", help="full-access ground-truth computations")
    _common(o, suppress=True)
    o.add_argument("--input", required=True)
    o.add_argument("--pattern", default="132", choices=("12", "21", "132"))
    o.add_argument("--op", choices=ORACLE_OPS, required=True)
    o.add_argument("--anchor", type=int, help="density: single anchor (default: all)")
    o.add_argument("--set", dest="positions", help="deserted: comma-separated positions of S")
    o.add_argument("--interval", help="deserted: LO,HI (default: 1,n)")
    o.add_argument("--gamma", type=float, help="deserted: density threshold in [0, 1)")
    o.add_argument("--reading", choices=("indices", "pairs"), default="indices")

    b = sub.add_parser("bench", help="batches, scaling tables and lemma sweeps")
    _common(b, suppress=True)
    b.add_argument("--experiment", choices=("batch", "scaling", "lemma"), required=True)
    b.add_argument("--input")
    b.add_argument("--gen")
    b.add_argument("--trials", type=int, default=20)
    b.add_argument("--fresh", action="store_true", help="batch: new instance per trial")
    b.add_argument("--threshold", type=float, help="batch: exit 1 unless the pass rule clears it")
    b.add_argument("--strict", action="store_true", help=f"batch: threshold {STRICT_THRESHOLD}")
    b.add_argument("--ns", help="scaling: comma-separated lengths")
    b.add_argument("--kind", choices=KINDS, default="planted")
    b.add_argument("--lemma", choices=LEMMAS)
    b.add_argument("--instances", type=int)
    b.add_argument("--n", type=int)
    b.add_argument("--out")
    _tester_flags(b)

    v = sub.add_parser("verify", help="check a witness against a sequence file")
    _common(v, suppress=True)
    v.add_argument("file", help="sequence file")
    v.add_argument("indices", nargs="+", help="witness indices, as 1 2 3 or 1,2,3")
    v.add_argument("--pattern", default="132", choices=("12", "21", "132"))
    return parser


# -- output helpers ---------------------------------------------------------------

def _json(obj) -> str:
    return json.dumps(obj, sort_keys=True)


class _Sink:
    def __init__(self, path: Optional[str]):
        self.path = path
        self.buf = io.StringIO() if path else None

    def write(self, text: str) -> None:
        (self.buf if self.buf is not None else sys.stdout).write(text)

    def close(self) -> None:
        if self.buf is not None:
            with open(self.path, "w", encoding="utf-8") as fh:
                fh.write(self.buf.getvalue())


def _emit_records(records: list[dict], fmt: str, sink: _Sink) -> None:
    if fmt == "csv":
        flat = [_flatten(r) for r in records]
        cols = []
        for r in flat:
            cols.extend(k for k in r if k not in cols)
        w = csv.DictWriter(sink, fieldnames=cols, lineterminator="\n")
        w.writeheader()
        for r in flat:
            w.writerow(r)
    elif fmt == "text":
        for r in records:
            sink.write(" ".join(f"{k}={v}" for k, v in _flatten(r).items()) + "\n")
    else:
        for r in records:
            sink.write(_json(r) + "\n")


def _flatten(d: dict, prefix: str = "") -> dict:
    out = {}
    for k, v in d.items():
        key = f"{prefix}{k}"
        if isinstance(v, dict):
            out.update(_flatten(v, key + "."))
        elif isinstance(v, (list, tuple)):
            out[key] = " ".join(str(x) for x in v)
        else:
            out[key] = v
    return out


def _config(args, seed: int) -> TesterConfig:
    return TesterConfig(epsilon=args.epsilon, c_outer=args.c_outer, c_sample=args.c_sample,
                        c_fc=args.c_fc, c_bs=args.c_bs, seed=seed,
                        strict_pseudocode=args.strict_pseudocode, fc_direction=args.fc_direction)


def _source(args) -> None:
    if args.input and args.gen:
        raise CliError("--input and --gen are mutually exclusive; give one of them")
    if not args.input and not args.gen:
        raise CliError("give an instance with --input FILE or --gen SPEC")


def _batch_spec(args, seed: int, trials: int, fresh: bool = False) -> BatchSpec:
    cfg = _config(args, seed)
    if args.input:
        return BatchSpec(config=cfg, kind=None, input_path=args.input, trials=trials, algo=args.algo)
    g = parse_gen_spec(args.gen)
    return BatchSpec(config=cfg, kind=g["kind"], n=g["n"], gen_eps=g.get("eps", args.epsilon),
                     instance_seed=g.get("seed", seed), trials=trials, algo=args.algo,
                     fresh_instances=fresh)


# -- subcommands ------------------------------------------------------------------

def cmd_generate(args, seed: int) -> int:
    if args.n < 1:
        raise CliError("--n must be positive")
    rec = make_instance(args.kind, args.n, args.epsilon, seed)
    meta = {"schema_version": SCHEMA_VERSION, **rec.to_dict()}
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(format_sequence(rec.sequence))
        with open(args.out + ".json", "w", encoding="utf-8") as fh:
            fh.write(json.dumps(meta, indent=2, sort_keys=True) + "\n")
        if not args.quiet:
            print(f"wrote {args.out} and {args.out}.json", file=sys.stderr)
    else:
        sys.stdout.write(format_sequence(rec.sequence))
    return 0


def cmd_test(args, seed: int) -> int:
    _source(args)
    if args.trials < 1:
        raise CliError("--trials must be at least 1")
    spec = _batch_spec(args, seed, args.trials)
    rec = spec.instance()
    from .core import QueryOracle
    from .testers import run_algo

    records, invalid = [], 0
    reports = []
    for i in range(args.trials):
        cfg = TesterConfig(**{**spec.config.to_dict(), "seed": trial_seed(seed, i)})
        rep = run_algo(QueryOracle(rec.sequence, budget=args.budget), args.algo, cfg)
        valid = None if rep.witness is None else rep.witness.is_valid(rec.sequence)
        invalid += valid is False
        reports.append(rep)
        records.append({"schema_version": SCHEMA_VERSION, "record": "trial", "trial": i,
                        **rep.to_dict(), "witness_valid": valid})
    rejections = sum(r.rejected for r in reports)
    queries = sorted(r.queries for r in reports)
    records.append({"schema_version": SCHEMA_VERSION, "record": "summary", "trials": args.trials,
                    "rejections": rejections, "rejection_rate": rejections / args.trials,
                    "invalid_witnesses": invalid, "queries_p50": queries[(len(queries) - 1) // 2],
                    "queries_max": queries[-1], "n": rec.sequence.n, "algo": args.algo,
                    "epsilon": args.epsilon, "seed": seed})
    sink = _Sink(args.out)
    _emit_records(records, args.format, sink)
    sink.close()
    if invalid:
        print(f"{invalid} returned witness(es) failed validation", file=sys.stderr)
        return 1
    return 0


def _parse_ints(text: str, what: str) -> list[int]:
    try:
        return [int(x) for x in text.replace("(", "").replace(")", "").split(",") if x.strip()]
    except ValueError:
        raise CliError(f"{what} must be comma-separated integers, got {text!r}") from None


def cmd_oracle(args, seed: int) -> int:
    f = read_sequence(args.input)
    pat = PatternSpec.parse(args.pattern)
    out: dict = {"schema_version": SCHEMA_VERSION, "op": args.op, "pattern": pat.name, "n": f.n}
    if args.op == "find":
        w = find_pattern_exhaustive(f, pat)
        out["witness"] = None if w is None else list(w.indices)
    elif args.op == "disjoint-lr":
        out["family"] = greedy_disjoint_tuples_lr(f, pat).to_dict()["tuples"]
    elif args.op in ("disjoint-plus", "gaps", "density"):
        if args.op == "disjoint-plus" and pat != P132:
            raise CliError("--op disjoint-plus needs --pattern 132")
        fam = greedy_disjoint_tuples_lr(f, pat)
        if pat == P132:
            fam = greedy_disjoint_tuples_plus(f, fam, args.reading)
        if args.op == "disjoint-plus":
            out["family"] = fam.to_dict()["tuples"]
        elif args.op == "gaps":
            out["classes"] = {str(c): k for c, k in classify_gaps(fam).items()}
        elif args.anchor is not None:
            out["profile"] = density_profile(f, fam, args.anchor).to_dict()
        else:
            out["cumulative"] = cumulative_densities(f, fam).tolist()
    elif args.op == "deserted":
        if args.gamma is None or args.positions is None:
            raise CliError("--op deserted needs --set and --gamma")
        if args.interval:
            lo, hi = _parse_ints(args.interval, "--interval")
            interval = Interval(lo, hi)
        else:
            interval = Interval(1, f.n)
        S = _parse_ints(args.positions, "--set")
        out["deserted"] = sorted(gamma_deserted_indices(S, interval, args.gamma))
    elif args.op == "distance":
        if f.n > EXACT_DISTANCE_MAX_N:
            raise CliError(f"exact distance needs n <= {EXACT_DISTANCE_MAX_N}; use --op bounds")
        d = exact_distance_to_free(f, pat)
        out.update(distance=d, normalized=d / f.n)
    else:
        lo, hi = distance_bounds(f, pat)
        out.update(lower=lo, upper=hi)
    sys.stdout.write(_json(out) + "\n")
    return 0


def cmd_bench(args, seed: int) -> int:
    sink = _Sink(args.out)
    status = 0
    if args.experiment == "batch":
        _source(args)
        spec = _batch_spec(args, seed, args.trials, fresh=args.fresh)
        batch = run_batch(spec)
        threshold = STRICT_THRESHOLD if args.strict else args.threshold
        rec = batch.summary_record()
        if threshold is not None:
            ok = meets_threshold(batch.summary["successes"], batch.summary["trials"], threshold)
            rec.update(threshold=threshold, passed=ok)
            status = 0 if ok else 1
        if batch.summary["invalid_witnesses"]:
            status = 1
        _emit_records([rec], args.format, sink)
    elif args.experiment == "scaling":
        if not args.ns:
            raise CliError("--experiment scaling needs --ns")
        ns = _parse_ints(args.ns, "--ns")
        cfg = _config(args, seed)
        rows = scaling_experiment(ns, args.epsilon, args.trials, args.kind, cfg, args.algo, seed)
        _emit_records([{"schema_version": SCHEMA_VERSION, "record": "scaling", **r} for r in rows],
                      args.format, sink)
    else:
        if not args.lemma:
            raise CliError("--experiment lemma needs --lemma")
        params = {"seed": seed}
        if args.instances is not None:
            params["instances"] = args.instances
        if args.n is not None:
            params["n"] = args.n
        if args.lemma == "L8" and "instances" in params:
            raise CliError("--instances does not apply to L8 (the grid is fixed)")
        try:
            rep = lemma_sweep(args.lemma, **params)
        except LemmaViolation as exc:
            _emit_records([{"schema_version": SCHEMA_VERSION, "record": "violation",
                            "which": exc.which, "counterexample": _json(exc.counterexample)}],
                          args.format, sink)
            sink.close()
            print(str(exc), file=sys.stderr)
            return 1
        except TypeError as exc:
            raise CliError(f"bad parameters for {args.lemma}: {exc}") from None
        _emit_records([rep.to_dict()], args.format, sink)
    sink.close()
    return status


def cmd_verify(args, seed: int) -> int:
    f = read_sequence(args.file)
    pat = PatternSpec.parse(args.pattern)
    idx = _parse_ints(",".join(args.indices), "witness")
    if len(idx) != pat.k:
        raise CliError(f"the witness needs {pat.k} indices for pattern {pat}")
    bad = [i for i in idx if not 1 <= i <= f.n]
    if bad:
        raise CliError(f"witness indices {bad} outside [1, {f.n}]")
    w = Witness(tuple(idx), pat)
    problems = w.violations(f)
    if problems:
        for msg in problems:
            print(msg, file=sys.stderr)
        return 1
    if not args.quiet:
        print(f"valid {pat} witness {tuple(idx)}")
    return 0


COMMANDS = {"generate": cmd_generate, "test": cmd_test, "oracle": cmd_oracle,
            "bench": cmd_bench, "verify": cmd_verify}


def main(argv: Optional[list[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        seed = args.seed if args.seed is not None else _default_seed()
        return COMMANDS[args.command](args, seed)
    except (CliError, UsageError) as exc:
        print(f"patfree {args.command}: error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"patfree {args.command}: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
