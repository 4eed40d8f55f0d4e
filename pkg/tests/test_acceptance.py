"""Acceptance gate: one test per criterion, each printing a PASS/FAIL line.

Run with ``pytest tests/test_acceptance.py -v``; the terminal summary lists
all eleven criteria at the end.
"""

import math
import time

import numpy as np
import pytest

from conftest import ACCEPTANCE_RESULTS
from patfree.bench import (
    DEFAULT_THRESHOLD,
    STRICT_THRESHOLD,
    clopper_pearson,
    lemma_sweep,
    meets_threshold,
    scaling_experiment,
    trial_seed,
)
from patfree.core import P12, P21, P132, Interval, QueryOracle, Sequence, ceil_log2, clamp_interval
from patfree.exact_oracle import (
    cumulative_densities,
    distance_bounds,
    exact_distance_to_free,
    greedy_disjoint_tuples_lr,
    greedy_disjoint_tuples_plus,
    is_free,
    monotone_crossing_density,
    refill,
)
from patfree.generators import gen_132_avoiding, gen_gap_controlled, gen_planted_far
from patfree.testers import (
    TesterConfig,
    epoch_count,
    epoch_samples,
    randomized_binary_search,
    run_algo,
    test_monotone_epoch as run_epoch,
)


def report(capsys, k, ok, detail):
    ACCEPTANCE_RESULTS[k] = (ok, detail)
    with capsys.disabled():
        print(f"\ncriterion {k}: {'PASS' if ok else 'FAIL'}  {detail}")
    assert ok, detail


def witness_is_sound(w, seq):
    i, j, k = w.indices
    return 1 <= i < j < k <= seq.n and seq[i] < seq[k] < seq[j]


# -- shared runs for criteria 1 to 3 ------------------------------------------------------

@pytest.fixture(scope="module")
def soundness_runs():
    """10,000 full-tester runs on (1,3,2)-avoiding permutations, n = 2^8 .. 2^14.

    Tester epsilon is 1.0 to fit the time budget; acceptance of free inputs
    does not depend on epsilon because every witness is re-checked.
    """
    sizes = [2 ** e for e in range(8, 15)]
    per_size = 40
    corpus = {n: [gen_132_avoiding(n, trial_seed(1000 + n, s)).sequence for s in range(per_size)]
              for n in sizes}
    t0 = time.perf_counter()
    reports = []
    for r in range(10_000):
        n = sizes[r % len(sizes)]
        seq = corpus[n][(r // len(sizes)) % per_size]
        cfg = TesterConfig(epsilon=1.0, seed=trial_seed(2024, r))
        reports.append((seq, run_algo(QueryOracle(seq), "full", cfg)))
    return reports, time.perf_counter() - t0


@pytest.fixture(scope="module")
def completeness_runs():
    """200 full-tester runs at eps = 0.1 on fresh planted instances with n = 2^14."""
    t0 = time.perf_counter()
    out = []
    for r in range(200):
        rec = gen_planted_far(2 ** 14, 0.1, trial_seed(77, r))
        assert rec.certified_far_lower >= 0.1 / 3
        cfg = TesterConfig(epsilon=0.1, seed=trial_seed(78, r))
        out.append((rec.sequence, run_algo(QueryOracle(rec.sequence), "full", cfg)))
    return out, time.perf_counter() - t0


def test_criterion_01_one_sided_error(soundness_runs, capsys):
    reports, elapsed = soundness_runs
    rejections = sum(rep.rejected for _, rep in reports)
    ok = rejections == 0 and len(reports) == 10_000 and elapsed < 300
    report(capsys, 1, ok, f"{len(reports)} runs on free inputs, {rejections} rejections (limit 0), "
                          f"{elapsed:.0f} s (limit 300 s)")


def test_criterion_02_completeness(completeness_runs, capsys):
    runs, elapsed = completeness_runs
    succ = sum(rep.rejected and witness_is_sound(rep.witness, seq) for seq, rep in runs)
    lo, _ = clopper_pearson(succ, len(runs))
    ok = meets_threshold(succ, len(runs), DEFAULT_THRESHOLD) and elapsed < 600
    strict = meets_threshold(succ, len(runs), STRICT_THRESHOLD)
    report(capsys, 2, ok, f"{succ}/{len(runs)} rejected with valid witness (rate {succ / len(runs):.3f}, "
                          f"95% lower {lo:.3f}, floor {DEFAULT_THRESHOLD}); strict {STRICT_THRESHOLD} "
                          f"{'met' if strict else 'not met'}; {elapsed:.0f} s")


def test_criterion_03_witness_soundness(soundness_runs, completeness_runs, capsys):
    rejections = [(seq, rep) for seq, rep in soundness_runs[0] + completeness_runs[0] if rep.rejected]
    bad = [rep.witness.indices for seq, rep in rejections
           if not (witness_is_sound(rep.witness, seq) and rep.witness.is_valid(seq))]
    report(capsys, 3, not bad, f"{len(rejections)} rejections checked, {len(bad)} invalid witnesses (limit 0)")


# -- query scaling ------------------------------------------------------------------------

def test_criterion_04_query_scaling(capsys):
    rows = scaling_experiment([2 ** 10, 2 ** 20], 0.1, 50, kind="planted", seed=5)
    small, big = rows
    total = big["median_total"] / small["median_total"]
    gap1 = big["median_gap1"] / small["median_gap1"]
    ok = total <= 24 and gap1 <= 12
    report(capsys, 4, ok, f"median total {small['median_total']:.0f} -> {big['median_total']:.0f}, "
                          f"ratio {total:.2f} (limit 24); gap-1 phase ratio {gap1:.2f} (limit 12)")


# -- epoch tester ---------------------------------------------------------------------------

def test_criterion_05_epoch_tester(capsys):
    n, eps = 2 ** 12, 0.2
    cfg0 = TesterConfig(epsilon=eps)
    samples = epoch_samples(eps, cfg0)
    limit = 2 * cfg0.c_sample * math.ceil(1 / eps) * ceil_log2(n)
    recs, anchors = [], []
    for s in range(10):
        rec = gen_planted_far(n, eps, trial_seed(300, s), pattern=P12)
        v = cumulative_densities(rec.sequence, greedy_disjoint_tuples_lr(rec.sequence, P12))
        recs.append(rec)
        anchors.append(np.flatnonzero(v >= eps / 12) + 1)
    rng = np.random.default_rng(301)
    succ, worst, exact = 0, 0, True
    for r in range(500):
        seq, pool = recs[r % 10].sequence, anchors[r % 10]
        l = int(pool[rng.integers(pool.size)])
        o = QueryOracle(seq)
        w = run_epoch(o, "12", l, Interval(1, n), eps, TesterConfig(epsilon=eps, seed=trial_seed(302, r)))
        succ += w is not None and w.is_valid(seq)
        worst = max(worst, o.query_count)
        epochs = epoch_count(max(l - 1, n - l))
        exact &= o.query_count % (2 * samples) == 0 and o.query_count <= epochs * 2 * samples
    ok = meets_threshold(succ, 500, 0.9) and worst <= limit and exact
    report(capsys, 5, ok, f"{succ}/500 successes (floor 0.9); max per-call queries {worst} "
                          f"(limit {limit}); loop arithmetic {'exact' if exact else 'VIOLATED'}")


# -- lemma sweeps ----------------------------------------------------------------------------

def test_criterion_06_anchor_density(capsys):
    rep = lemma_sweep("L2", instances=50, n=2 ** 10, eps_grid=(0.1, 0.2, 0.3), seed=6)
    report(capsys, 6, rep.passed == rep.checked == 50,
           f"{rep.passed}/{rep.checked} instances with qualifying-anchor fraction >= eps/12; "
           f"tightest margin {rep.tightest_margin:.4f}")


def test_criterion_07_crossing_monotone(capsys):
    rep = lemma_sweep("L3", instances=1000, n_max=256, seed=7)
    report(capsys, 7, rep.passed == rep.checked == 1000, f"{rep.passed}/{rep.checked} crossing checks pass")


def test_criterion_08_gap_class_share(capsys):
    rep = lemma_sweep("L5", instances=1000, n_max=256, seed=8)
    ratio = rep.details["min_ratio"]
    report(capsys, 8, rep.passed == rep.checked == 1000 and ratio >= 1 / 9,
           f"{rep.passed}/{rep.checked} families with max class >= |T0|/9; "
           f"smallest observed ratio {ratio:.4f} (proof constant 1/3 reported, not gated)")


def test_criterion_09_deserted_bound(capsys):
    rep = lemma_sweep("L8", seed=9)
    report(capsys, 9, rep.passed == rep.checked,
           f"{rep.checked} (S, I, gamma) checks, 0 violations; every S for |I| <= "
           f"{rep.details['exhaustive_len']}, {rep.details['random_per_len']} random plus structured "
           f"S per length up to {rep.details['max_len']}")


# -- binary search ------------------------------------------------------------------------------

def test_criterion_10_binary_search(capsys):
    n, eps = 2 ** 12, 0.1
    cfg0 = TesterConfig(epsilon=eps)
    logn = ceil_log2(n)
    limit = cfg0.c_bs * logn * (cfg0.c_fc * math.ceil(math.log2(math.log2(n)) * math.log2(n) / eps) + 3)
    need = eps / (36 * logn)
    rng = np.random.default_rng(310)
    succ, worst, calls = 0, 0, 0
    for s in range(10):
        rec = gen_gap_controlled(n, eps, 2, trial_seed(311, s))
        f = rec.sequence
        fam = greedy_disjoint_tuples_plus(f, greedy_disjoint_tuples_lr(f, P132))
        for _ in range(30):
            i, j, k = fam.tuples[int(rng.integers(len(fam)))]
            l = int(rng.integers(j, k))
            t = max(1, ceil_log2(max(l - i, k - l)))
            assert monotone_crossing_density(fam, l, t, n) >= need
            L, R = clamp_interval(l - 2 ** t, l, n), clamp_interval(l, l + 2 ** t, n)
            o = QueryOracle(f)
            x = randomized_binary_search(o, l, L, R, i, j, eps,
                                         TesterConfig(epsilon=eps, seed=trial_seed(312, calls)),
                                         fi=f[i], fj=f[j])
            succ += x is not None and j < x and f[i] < f[x] < f[j]
            worst = max(worst, o.query_count)
            calls += 1
    ok = meets_threshold(succ, calls, 0.9) and worst <= limit
    report(capsys, 10, ok, f"{succ}/{calls} searches completed a witness (floor 0.9); "
                           f"max per-call queries {worst} (limit {limit})")


# -- oracle cross-validation -------------------------------------------------------------------

def test_criterion_11_oracle_cross_validation(capsys):
    rng = np.random.default_rng(11)
    failures = []
    for s in range(2000):
        n = int(rng.integers(1, 13))
        vals = rng.permutation(n) + 1 if s % 3 else rng.integers(0, max(2, n // 2), size=n)
        f = Sequence(vals)
        for pat in (P12, P21, P132):
            lo, hi = distance_bounds(f, pat)
            d = exact_distance_to_free(f, pat)
            fixed = refill(f, greedy_disjoint_tuples_lr(f, pat).support, pat)
            if not (lo <= d <= hi and is_free(fixed, pat)):
                failures.append((f.tolist(), pat.name, lo, d, hi))
    report(capsys, 11, not failures, f"2000 sequences x 3 patterns, {len(failures)} sandwich or refill "
                                     f"failures (limit 0)")
