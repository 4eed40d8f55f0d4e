"""Trial orchestration, summary statistics and lemma validation sweeps.

Per-trial tester seeds come from :func:`trial_seed`, a splitmix64 of
``base + index``. Summaries hold only quantities that are deterministic
given the batch spec and seed; wall-clock figures live in a separate ``timing``
record so repeated runs produce identical summaries.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional

import numpy as np
from scipy import stats

from .core import (
    P12,
    P21,
    P132,
    Interval,
    QueryOracle,
    Sequence,
    TestReport,
    UsageError,
    ceil_log2,
    clamp_interval,
    read_sequence,
)
from .exact_oracle import (
    TupleFamily,
    classify_gaps,
    crossing_monotone_check,
    crossing_third_elements,
    cumulative_densities,
    gamma_deserted_indices,
    greedy_disjoint_tuples_lr,
    greedy_disjoint_tuples_plus,
    is_free,
    deserted_bound,
    monotone_crossing_density,
)
from .generators import InstanceRecord, make_instance
from .testers import ALGOS, TesterConfig, run_algo

__all__ = [
    "SCHEMA_VERSION",
    "splitmix64",
    "trial_seed",
    "clopper_pearson",
    "meets_threshold",
    "BatchSpec",
    "TrialBatch",
    "run_batch",
    "summarize",
    "scaling_experiment",
    "LemmaReport",
    "LemmaViolation",
    "lemma_sweep",
    "LEMMAS",
    "DEFAULT_THRESHOLD",
    "STRICT_THRESHOLD",
]

SCHEMA_VERSION = 1
MASK64 = (1 << 64) - 1
DEFAULT_THRESHOLD = 0.85
STRICT_THRESHOLD = 0.90
LEMMAS = ("L2", "L3", "L5", "L8", "L9")


def splitmix64(x: int) -> int:
    """One splitmix64 output step; a bijection on 64-bit integers."""
    z = (int(x) + 0x9E3779B97F4A7C15) & MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


def trial_seed(base: int, index: int) -> int:
    return splitmix64((int(base) + int(index)) & MASK64)


def clopper_pearson(successes: int, trials: int, alpha: float = 0.05) -> tuple[float, float]:
    """Exact two-sided binomial confidence interval."""
    if trials <= 0:
        raise UsageError("need at least one trial")
    lo = 0.0 if successes == 0 else float(stats.beta.ppf(alpha / 2, successes, trials - successes + 1))
    hi = 1.0 if successes == trials else float(stats.beta.ppf(1 - alpha / 2, successes + 1, trials - successes))
    return lo, hi


def meets_threshold(successes: int, trials: int, threshold: float) -> bool:
    """Pass when the 95% lower bound clears ``threshold``, or the point
    estimate does with at least 200 trials."""
    lo, _ = clopper_pearson(successes, trials)
    return lo >= threshold or (trials >= 200 and successes / trials >= threshold)


# -- batches --------------------------------------------------------------------------

@dataclass
class BatchSpec:
    """What to run: an instance source, a tester and a trial count.

    The instance comes from ``input_path`` or from the generator ``kind``
    with ``n``, ``gen_eps`` and ``instance_seed``. With ``fresh_instances``
    every trial draws its own instance (seeded by its trial seed).
    ``expect`` is ``"far"``, ``"free"`` or ``None`` to decide from the data.
    """

    config: TesterConfig = field(default_factory=TesterConfig)
    kind: Optional[str] = "planted"
    n: int = 1024
    gen_eps: Optional[float] = None
    instance_seed: int = 0
    input_path: Optional[str] = None
    trials: int = 10
    algo: str = "full"
    fresh_instances: bool = False
    expect: Optional[str] = None

    def __post_init__(self):
        if self.trials < 1:
            raise UsageError("trials must be at least 1")
        if self.algo not in ALGOS:
            raise UsageError(f"unknown algo {self.algo!r}")
        if self.expect not in (None, "far", "free"):
            raise UsageError(f"expect must be 'far', 'free' or None, got {self.expect!r}")
        if self.input_path is None and self.kind is None:
            raise UsageError("give either a generator kind or an input path")

    def describe(self) -> dict:
        if self.input_path is not None:
            inst = {"input": self.input_path}
        else:
            inst = {"kind": self.kind, "n": self.n, "eps": self._gen_eps(),
                    "instance_seed": self.instance_seed, "fresh": self.fresh_instances}
        return {"instance": inst, "algo": self.algo, "trials": self.trials,
                "config": self.config.to_dict()}

    def _gen_eps(self) -> float:
        return self.config.epsilon if self.gen_eps is None else self.gen_eps

    def instance(self, trial: Optional[int] = None) -> InstanceRecord:
        if self.input_path is not None:
            try:
                seq = read_sequence(self.input_path)
            except OSError as exc:
                raise OSError(f"cannot read instance {self.input_path}: {exc.strerror}") from exc
            return InstanceRecord(seq, None, None, None, 0, "file", {"path": self.input_path})
        seed = self.instance_seed if trial is None else trial_seed(self.instance_seed, trial)
        return make_instance(self.kind, self.n, self._gen_eps(), seed)


def _pattern_for(algo: str):
    return {"mono12": P12, "mono21": P21}.get(algo, P132)


def _expectation(rec: InstanceRecord, algo: str, declared: Optional[str]) -> str:
    if declared is not None:
        return declared
    return "free" if is_free(rec.sequence, _pattern_for(algo)) else "far"


def _quantile(xs: list[int], q: float) -> float:
    return float(np.quantile(np.asarray(xs, dtype=np.float64), q, method="lower")) if xs else 0.0


def summarize(results: list[TestReport], expectations: list[str],
              sequences: Optional[list[Sequence]] = None) -> dict:
    """Summary statistics recomputable from the per-trial reports.

    A trial succeeds when a far instance is rejected with a valid witness or
    a free instance is accepted. Witness validity needs the sequences.
    """
    invalid = 0
    succ = 0
    for i, (rep, exp) in enumerate(zip(results, expectations)):
        valid = True
        if rep.rejected and sequences is not None:
            valid = rep.witness.is_valid(sequences[i])
            invalid += not valid
        if exp == "far":
            succ += rep.rejected and valid
        else:
            succ += not rep.rejected
    queries = [r.queries for r in results]
    lo, hi = clopper_pearson(succ, len(results))
    phases = sorted({k for r in results for k in r.phase_queries})
    return {
        "trials": len(results),
        "successes": int(succ),
        "success_rate": succ / len(results),
        "ci_low": lo,
        "ci_high": hi,
        "rejections": sum(r.rejected for r in results),
        "invalid_witnesses": invalid,
        "budget_exhausted": sum(r.budget_exhausted for r in results),
        "queries_p50": _quantile(queries, 0.5),
        "queries_p90": _quantile(queries, 0.9),
        "queries_max": max(queries),
        "phase_p50": {p: _quantile([r.phase_queries.get(p, 0) for r in results], 0.5) for p in phases},
    }


@dataclass
class TrialBatch:
    spec: BatchSpec
    results: list[TestReport]
    expectations: list[str]
    summary: dict
    timing: dict

    def passes(self, threshold: float = DEFAULT_THRESHOLD) -> bool:
        return meets_threshold(self.summary["successes"], self.summary["trials"], threshold)

    def summary_record(self) -> dict:
        return {"schema_version": SCHEMA_VERSION, "record": "summary",
                "spec": self.spec.describe(), **self.summary}


def run_batch(spec: BatchSpec, on_report=None) -> TrialBatch:
    """Run ``spec.trials`` independent trials; ``on_report(i, report)`` streams results."""
    fixed = None if spec.fresh_instances else spec.instance()
    results, exps, seqs = [], [], []
    for i in range(spec.trials):
        rec = spec.instance(i) if fixed is None else fixed
        cfg = TesterConfig(**{**spec.config.to_dict(), "seed": trial_seed(spec.config.seed, i)})
        rep = run_algo(QueryOracle(rec.sequence), spec.algo, cfg)
        results.append(rep)
        exps.append(_expectation(rec, spec.algo, spec.expect) if (fixed is None or i == 0) else exps[0])
        seqs.append(rec.sequence)
        if on_report is not None:
            on_report(i, rep)
    summary = summarize(results, exps, seqs)
    elapsed = [r.elapsed for r in results]
    timing = {"mean_elapsed": float(np.mean(elapsed)), "total_elapsed": float(np.sum(elapsed))}
    return TrialBatch(spec, results, exps, summary, timing)


def scaling_experiment(ns: list[int], eps: float, trials: int, kind: str = "planted",
                       config: Optional[TesterConfig] = None, algo: str = "full",
                       seed: int = 0) -> list[dict]:
    """Median query counts (total and per phase) on fresh instances for each ``n``."""
    ns = list(ns)
    if any(b <= a for a, b in zip(ns, ns[1:])):
        raise UsageError("ns must be strictly increasing")
    if any(n < 64 for n in ns):
        raise UsageError("every n must be at least 64")
    base = config or TesterConfig(epsilon=eps)
    base = TesterConfig(**{**base.to_dict(), "epsilon": eps, "seed": seed})
    rows = []
    for n in ns:
        spec = BatchSpec(config=base, kind=kind, n=n, gen_eps=eps, instance_seed=seed + n,
                         trials=trials, algo=algo, fresh_instances=True)
        batch = run_batch(spec)
        res = batch.results
        rows.append({
            "n": n,
            "epsilon": eps,
            "trials": trials,
            "success_rate": batch.summary["success_rate"],
            "median_total": float(np.median([r.queries for r in res])),
            "median_gap1": float(np.median([r.phase_queries.get("gap1", 0) for r in res])),
            "median_gap2": float(np.median([r.phase_queries.get("gap2", 0) for r in res])),
        })
    return rows


# -- lemma sweeps -----------------------------------------------------------------------

class LemmaViolation(AssertionError):
    """A checked inequality failed; ``counterexample`` is JSON-serializable."""

    def __init__(self, which: str, counterexample: dict):
        super().__init__(f"{which} violated: {counterexample}")
        self.which = which
        self.counterexample = counterexample


@dataclass
class LemmaReport:
    which: str
    checked: int
    passed: int
    tightest_margin: Optional[float]
    details: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {"schema_version": SCHEMA_VERSION, "record": "lemma", "which": self.which,
                "checked": self.checked, "passed": self.passed,
                "tightest_margin": self.tightest_margin, **self.details}


def _random_families(count: int, n_max: int, seed: int):
    """``(f, T0)`` pairs: random permutations (or planted instances) and random
    subfamilies of their left-to-right greedy (1,3,2) families."""
    rng = np.random.default_rng(seed)
    made = 0
    while made < count:
        n = int(rng.integers(6, n_max + 1))
        if made % 4 == 3 and n >= 30:
            rec = make_instance(str(rng.choice(["planted", "gap1", "gap2"])), n,
                                float(rng.choice([0.1, 0.2, 0.3])), int(rng.integers(1 << 31)))
            f = rec.sequence
        else:
            f = Sequence(rng.permutation(n) + 1)
        full = greedy_disjoint_tuples_lr(f, P132)
        if len(full) == 0:
            continue
        keep = [t for t in full.tuples if rng.random() < 0.7] or [full.tuples[0]]
        made += 1
        yield f, TupleFamily(P132, tuple(keep))


def _seq_dump(f: Sequence) -> list:
    return [int(v) if float(v).is_integer() else v for v in f.tolist()]


def _sweep_l2(instances=50, n=1024, eps_grid=(0.1, 0.2, 0.3), seed=0, **_):
    kinds = ("planted", "gap1", "gap2")
    margins = []
    for idx in range(instances):
        eps = eps_grid[idx % len(eps_grid)]
        kind = kinds[(idx // len(eps_grid)) % len(kinds)]
        rec = make_instance(kind, n, eps, trial_seed(seed, idx))
        fam = greedy_disjoint_tuples_plus(rec.sequence, greedy_disjoint_tuples_lr(rec.sequence, P132))
        v = cumulative_densities(rec.sequence, fam)
        frac = float(np.mean(v >= eps / 12))
        if frac < eps / 12:
            raise LemmaViolation("L2", {"kind": kind, "n": n, "eps": eps, "seed": rec.seed,
                                        "fraction": frac, "required": eps / 12})
        margins.append(frac - eps / 12)
    return LemmaReport("L2", instances, instances, min(margins))


def _sweep_l3(instances=1000, n_max=256, seed=0, **_):
    for f, t0 in _random_families(instances, n_max, seed):
        fam = greedy_disjoint_tuples_plus(f, t0)
        res = crossing_monotone_check(fam, f)
        if not res:
            raise LemmaViolation("L3", {"sequence": _seq_dump(f), "T0": t0.to_dict()["tuples"],
                                        "T": fam.to_dict()["tuples"], "l_k1_k2": list(res.counterexample)})
    return LemmaReport("L3", instances, instances, None)


def _sweep_l5(instances=1000, n_max=256, seed=0, **_):
    worst = math.inf
    for f, t0 in _random_families(instances, n_max, seed):
        fam = greedy_disjoint_tuples_plus(f, t0)
        counts = classify_gaps(fam)
        best = max(counts.values(), default=0)
        if 9 * best < len(t0):
            raise LemmaViolation("L5", {"sequence": _seq_dump(f), "T0": t0.to_dict()["tuples"],
                                        "T": fam.to_dict()["tuples"], "class_counts": counts})
        worst = min(worst, best / len(t0))
        if fam.invalid_members(f):
            raise LemmaViolation("L5", {"sequence": _seq_dump(f), "invalid": fam.invalid_members(f)})
    return LemmaReport("L5", instances, instances, worst - 1 / 9,
                       {"min_ratio": worst, "gated_ratio": 1 / 9, "proof_ratio": 1 / 3})


def _l8_violations(m: int, masks: np.ndarray, gammas: list[Fraction]):
    """Bit-parallel deserted counts for many subsets ``S`` of ``I = [1, m]`` at once.

    Bit ``b`` of a mask marks position ``b + 1``. For every window ``J`` the
    members of ``S`` inside a window with ``|S ∩ J| < gamma |J|`` are marked
    deserted. Yields ``(gamma, mask, deserted, bound_slack)`` per gamma where
    ``bound_slack`` is the smallest ``bound - deserted`` over the masks (or a
    violating mask when negative).
    """
    one = np.uint64(1)
    bits = [((masks >> np.uint64(b)) & one).astype(np.int16) for b in range(m)]
    sizes = np.sum(bits, axis=0, dtype=np.int64)
    cover = [np.zeros_like(masks) for _ in gammas]
    for a in range(m):
        cnt = np.zeros(masks.size, dtype=np.int16)
        for b in range(a, m):
            cnt += bits[b]
            length = b - a + 1
            jm = np.uint64(((1 << length) - 1) << a)
            for gi, g in enumerate(gammas):
                low = cnt < -(-g.numerator * length // g.denominator)  # cnt < gamma |J|
                if low.any():
                    cover[gi] |= np.where(low, jm, np.uint64(0))
    for gi, g in enumerate(gammas):
        hit = masks & cover[gi]
        d = np.zeros(masks.size, dtype=np.int64)
        for b in range(m):
            d += ((hit >> np.uint64(b)) & one).astype(np.int64)
        p, q = g.numerator, g.denominator
        # d <= 3 g (m - |S|) / (1 - g), scaled by q (1 - g) to stay in integers
        slack = 3 * p * (m - sizes) - d * (q - p)
        worst = int(np.argmin(slack))
        yield g, int(masks[worst]), int(d[worst]), Fraction(int(slack[worst]), q - p)


def _mask(positions) -> int:
    return sum(1 << (i - 1) for i in positions)


def _sweep_l8(max_len=64, exhaustive_len=20, random_per_len=2000, crosscheck_per_len=10,
              seed=0, **_):
    """Every nonempty subset for ``|I| <= exhaustive_len``; random and structured ones beyond.

    Counts come from a bit-parallel evaluator; a sample per length is
    recomputed with :func:`gamma_deserted_indices` and must agree exactly.
    """
    gammas = [Fraction(k, 20) for k in range(1, 11)]
    rng = np.random.default_rng(seed)
    checked = 0
    tightest = math.inf
    for m in range(1, max_len + 1):
        if m <= exhaustive_len:
            masks = np.arange(1, 1 << m, dtype=np.uint64)
        else:
            structured = [range(1, m + 1), [1], [m], [1, m], range(1, m + 1, 2),
                          range(1, m // 2 + 1), range(m // 2, m + 1)]
            structured += [range(1, s + 1) for s in range(1, m)]
            structured += [range(m - s + 1, m + 1) for s in range(1, m)]
            structured += [[i for i in range(1, m + 1) if (i - 1) % per < run]
                           for per in range(2, 9) for run in range(1, per)]
            rand = []
            for _ in range(random_per_len):
                size = int(rng.integers(1, m + 1))
                rand.append(rng.choice(m, size=size, replace=False) + 1)
            masks = np.array(sorted({_mask(S) for S in structured + rand}), dtype=np.uint64)
        for g, mask, d, slack in _l8_violations(m, masks, gammas):
            if slack < 0:
                S = [b + 1 for b in range(m) if mask >> b & 1]
                raise LemmaViolation("L8", {"I": [1, m], "S": S, "gamma": str(g), "deserted": d,
                                            "bound": float(deserted_bound(len(S), m, g))})
            tightest = min(tightest, float(slack))
        checked += masks.size * len(gammas)
        for idx in rng.choice(masks.size, size=min(crosscheck_per_len, masks.size), replace=False):
            mask = int(masks[idx])
            S = [b + 1 for b in range(m) if mask >> b & 1]
            g = gammas[int(rng.integers(len(gammas)))]
            ref = _l8_violations(m, np.array([mask], dtype=np.uint64), [g])
            d = next(ref)[2]
            if d != len(gamma_deserted_indices(S, Interval(1, m), g)):
                raise LemmaViolation("L8", {"I": [1, m], "S": S, "gamma": str(g),
                                            "evaluator_mismatch": True})
    return LemmaReport("L8", checked, checked, tightest,
                       {"exhaustive_len": exhaustive_len, "max_len": max_len,
                        "random_per_len": random_per_len})


def _sweep_l9(instances=10, n=1024, eps=0.1, windows_per_instance=200, seed=0, **_):
    """Non-deserted share of crossing third elements at windows meeting the density precondition."""
    logn = max(1, ceil_log2(n))
    gamma = Fraction(str(eps)) / (936 * logn)
    need = 1 - 1 / (52 * logn)
    rng = np.random.default_rng(seed)
    checked = 0
    tightest = math.inf
    for idx in range(instances):
        rec = make_instance("gap2", n, eps, trial_seed(seed, idx))
        fam = greedy_disjoint_tuples_plus(rec.sequence, greedy_disjoint_tuples_lr(rec.sequence, P132))
        for _ in range(windows_per_instance):
            l = int(rng.integers(1, n + 1))
            t = int(rng.integers(1, logn + 1))
            if monotone_crossing_density(fam, l, t, n) < eps / (36 * logn):
                continue
            win = clamp_interval(l - 2 ** t, l + 2 ** t, n)
            right = clamp_interval(l, l + 2 ** t, n)
            S = [k for k in crossing_third_elements(fam, l, win) if k in right]
            if not S:
                continue
            deserted = gamma_deserted_indices(S, win, gamma)
            share = 1 - len(deserted) / len(S)
            checked += 1
            if share < need:
                raise LemmaViolation("L9", {"n": n, "eps": eps, "seed": rec.seed, "l": l, "t": t,
                                            "S": S, "deserted": sorted(deserted)})
            tightest = min(tightest, share - need)
    return LemmaReport("L9", checked, checked, None if checked == 0 else tightest,
                       {"gamma": float(gamma), "required_share": need})


_SWEEPS = {"L2": _sweep_l2, "L3": _sweep_l3, "L5": _sweep_l5, "L8": _sweep_l8, "L9": _sweep_l9}


def lemma_sweep(which: str, **params) -> LemmaReport:
    """Evaluate one lemma's inequality with full access over a seeded corpus.

    Raises :class:`LemmaViolation` with a serialized counterexample on the
    first failure; never reports a partial pass.
    """
    if which not in _SWEEPS:
        raise UsageError(f"unknown lemma {which!r}; choose from {', '.join(LEMMAS)}")
    return _SWEEPS[which](**params)
