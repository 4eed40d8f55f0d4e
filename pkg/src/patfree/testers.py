"""Adaptive one-sided-error testers.

All access to the input goes through a :class:`~patfree.core.QueryOracle`.
Every candidate witness is re-checked with strict inequalities on queried
values before it is returned, so a pattern-free input is always accepted.

Sampling is uniform with replacement. Sample counts per block:

* epoch tester: ``c_sample * ceil(1 / eps)``
* coordinate finder: ``c_fc * ceil(log2(log2 n) / eps)``
* gap-1 left-element search: ``ceil(10 * ceil(log2 n) / eps)``

Inner calls of the (1,3,2) testers use ``eps / ceil(log2 n)``.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, asdict
from typing import Optional

import numpy as np

from . import _kernels
from .core import (
    P12,
    P21,
    P132,
    Interval,
    PatternSpec,
    QueryBudgetExceeded,
    QueryOracle,
    TestReport,
    UsageError,
    Witness,
    ceil_log2,
    clamp_interval,
)

__all__ = [
    "TesterConfig",
    "ALGOS",
    "test_monotone_epoch",
    "test_monotone",
    "find_coordinate",
    "standard_binary_search",
    "randomized_binary_search",
    "test_132_gap1",
    "test_132_gap2",
    "test_132",
    "run_algo",
    "epoch_count",
    "epoch_samples",
    "fc_samples",
    "left_samples",
    "bs_iterations",
]

ALGOS = ("mono12", "mono21", "gap1", "gap2", "full")

# compiled epoch search for plain counting oracles; the numpy path is the reference
USE_KERNEL = _kernels.epoch_core is not None


@dataclass(frozen=True)
class TesterConfig:
    """Loop constants and seed.

    ``c_outer`` scales the number of random anchors, ``c_sample`` the
    per-block samples of the epoch tester, ``c_fc`` those of the coordinate
    finder and ``c_bs`` the binary-search iterations (``c_bs * ceil(log2 n)``).
    ``strict_pseudocode`` makes the gap-2 tester stop at its first failed
    binary search instead of moving on to the next anchor. ``fc_direction``
    picks which pair the coordinate finder looks for.
    """

    __test__ = False

    epsilon: float = 0.1
    c_outer: int = 20
    c_sample: int = 20
    c_fc: int = 20
    c_bs: int = 3
    seed: int = 0
    strict_pseudocode: bool = False
    fc_direction: str = "12"

    def __post_init__(self):
        if not 0 < self.epsilon <= 1:
            raise UsageError(f"epsilon must lie in (0, 1], got {self.epsilon}")
        for name in ("c_outer", "c_sample", "c_fc", "c_bs"):
            if int(getattr(self, name)) < 1:
                raise UsageError(f"{name} must be a positive integer")
        if self.fc_direction not in ("12", "21"):
            raise UsageError(f"fc_direction must be '12' or '21', got {self.fc_direction!r}")

    def rng(self) -> np.random.Generator:
        return np.random.default_rng(int(self.seed) & ((1 << 64) - 1))

    def to_dict(self) -> dict:
        return asdict(self)


# -- loop arithmetic -------------------------------------------------------------

def _ceil(x: float) -> int:
    """Ceiling that ignores float noise just above an integer."""
    return max(1, math.ceil(x - 1e-9 * max(1.0, abs(x))))


def epoch_samples(eps: float, cfg: TesterConfig) -> int:
    return cfg.c_sample * _ceil(1.0 / eps)


def fc_samples(n: int, eps: float, cfg: TesterConfig) -> int:
    loglog = max(1.0, math.log2(max(2.0, math.log2(max(n, 2)))))
    return cfg.c_fc * _ceil(loglog / eps)


def left_samples(n: int, eps: float) -> int:
    return _ceil(10 * max(1, ceil_log2(n)) / eps)


def bs_iterations(n: int, cfg: TesterConfig) -> int:
    return cfg.c_bs * max(1, ceil_log2(n))


def outer_rounds(eps: float, cfg: TesterConfig) -> int:
    return cfg.c_outer * _ceil(1.0 / eps)


def epoch_count(extent: int) -> int:
    """Epochs needed so the last window reaches ``extent`` positions from the anchor.

    A domain of two or more positions always gets at least one epoch.
    """
    if extent < 1:
        return 0
    return max(1, ceil_log2(extent))


def _inner_eps(eps: float, n: int) -> float:
    return eps / max(1, ceil_log2(n))


# -- epoch kernel ------------------------------------------------------------------

def _uniform(rng: np.random.Generator, lo: int, hi: int, size: Optional[int] = None):
    """Uniform integers in ``[lo, hi]``; scaled floats are much cheaper than ``integers``."""
    if size is None:
        return lo + int(rng.random() * (hi - lo + 1))
    return lo + (rng.random(size) * (hi - lo + 1)).astype(np.int64)


class _Line:
    """A domain of one or two position runs, read as one line in position order.

    ``first`` covers virtual slots ``0..len_first-1``; ``second`` (if any)
    follows. Sampling uniformly over slots is uniform over the union.
    """

    __slots__ = ("a", "len_first", "c", "length")

    def __init__(self, first: Interval, second: Optional[Interval] = None):
        if second is not None and second.lo <= first.hi + 1:
            lo, hi = min(first.lo, second.lo), max(first.hi, second.hi)
            first, second = Interval(lo, hi), None
        self.a = first.lo
        self.len_first = len(first)
        self.c = second.lo if second is not None else first.hi + 1
        self.length = self.len_first + (len(second) if second is not None else 0)

    def positions(self, slots: np.ndarray) -> np.ndarray:
        if self.length == self.len_first:
            return self.a + slots
        return np.where(slots < self.len_first, self.a + slots, self.c + (slots - self.len_first))

    def slot_of(self, pos: int) -> int:
        if pos < self.a + self.len_first:
            return pos - self.a
        return self.len_first + (pos - self.c)


def _epoch_search(oracle: QueryOracle, rng: np.random.Generator, line: _Line, u: int,
                  samples: int, up: bool, second_from: int = 0):
    """Doubling-window search for a pair around virtual anchor ``u``.

    Each epoch samples ``samples`` slots from ``[u - 2^t, u]`` and from
    ``[u, u + 2^t]`` (clipped to the line). Every point seen so far is kept;
    after each epoch the pair whose second element is closest to the anchor
    (smaller slot on ties, and at slot ``>= second_from``) is returned along
    with the first element of most extreme value before it.

    Returns ``(pos_a, val_a, pos_b, val_b)`` or ``None``.
    """
    V = line.length
    epochs = epoch_count(max(u, V - 1 - u))
    if epochs == 0:
        return None
    if USE_KERNEL and type(oracle) is QueryOracle and oracle.transcript is None:
        remaining = (1 << 62) if oracle.budget is None else oracle.budget - oracle.query_count
        status, used, pa, va, pb, vb = _kernels.epoch_core(
            oracle._values, line.a, line.len_first, line.c, V, u, epochs, samples, up,
            second_from, remaining, rng)
        oracle._charge(used)
        if status == _kernels.OVER_BUDGET:
            oracle._charge(2 * samples)  # raises, exactly as the next batch would
        if status == _kernels.NOT_FOUND:
            return None
        return int(pa), float(va), int(pb), float(vb)
    # windows are nested, so one dense array (NaN = not yet seen) holds every sample
    base = max(0, u - (1 << epochs))
    seen = np.full(min(V, u + (1 << epochs) + 1) - base, np.nan)
    scan = np.fmin.accumulate if up else np.fmax.accumulate
    for t in range(1, epochs + 1):
        r = 1 << t
        lo, hi = max(0, u - r), min(V - 1, u + r)
        xs = rng.random(2 * samples)
        xs[:samples] *= u - lo + 1
        xs[samples:] *= hi - u + 1
        xs = xs.astype(np.int64)
        xs[:samples] += lo
        xs[samples:] += u
        seen[xs - base] = oracle._probe(line.positions(xs))
        w = seen[lo - base:hi - base + 1]
        ext = scan(w)  # NaN until the first seen point; NaN never compares true
        bs = np.flatnonzero((ext[:-1] < w[1:]) if up else (ext[:-1] > w[1:]))
        if bs.size == 0:
            continue
        bs += lo + 1
        first = int(np.searchsorted(bs, max(u, second_from)))
        right = int(bs[first]) if first < bs.size else None
        left = int(bs[first - 1]) if first > 0 and bs[first - 1] >= second_from else None
        if left is None and right is None:
            continue
        if right is None or (left is not None and u - left <= right - u):
            b = left
        else:
            b = right
        target = ext[b - lo - 1]
        a = lo + int(np.argmax(w[:b - lo] == target))
        pa, pb = line.positions(np.array([a, b])).tolist()
        return pa, float(target), pb, float(seen[b - base])
    return None


def _direction(direction) -> bool:
    pat = direction if isinstance(direction, PatternSpec) else PatternSpec.parse(str(direction))
    if pat == P12:
        return True
    if pat == P21:
        return False
    raise UsageError(f"direction must be (1,2) or (2,1), got {pat}")


def _pair_ok(va: float, vb: float, up: bool) -> bool:
    return va < vb if up else va > vb


# -- monotone testers ----------------------------------------------------------------

def test_monotone_epoch(oracle: QueryOracle, direction, l: int, domain: Interval, eps: float,
                        cfg: TesterConfig, rng: Optional[np.random.Generator] = None
                        ) -> Optional[Witness]:
    """Epoch search for a (1,2) or (2,1) pair inside ``domain`` around anchor ``l``.

    Runs ``ceil(log2(extent))`` epochs, where ``extent`` is the distance from
    ``l`` to the farther end of ``domain``, with ``c_sample * ceil(1/eps)``
    samples on each side per epoch.
    """
    up = _direction(direction)
    if l not in domain:
        raise UsageError(f"anchor {l} outside domain [{domain.lo}, {domain.hi}]")
    if eps <= 0:
        raise UsageError("eps must be positive")
    rng = cfg.rng() if rng is None else rng
    line = _Line(domain)
    hit = _epoch_search(oracle, rng, line, l - domain.lo, epoch_samples(eps, cfg), up)
    if hit is None:
        return None
    pa, va, pb, vb = hit
    if not _pair_ok(va, vb, up):
        return None
    return Witness((pa, pb), P12 if up else P21)


def test_monotone(oracle: QueryOracle, direction, eps: float, cfg: TesterConfig,
                  rng: Optional[np.random.Generator] = None) -> Optional[Witness]:
    """Epoch search from ``c_outer * ceil(1/eps)`` uniformly random anchors."""
    rng = cfg.rng() if rng is None else rng
    n = oracle.n
    dom = Interval(1, n)
    for _ in range(outer_rounds(eps, cfg)):
        l = _uniform(rng, 1, n)
        w = test_monotone_epoch(oracle, direction, l, dom, eps, cfg, rng)
        if w is not None:
            return w
    return None


def find_coordinate(oracle: QueryOracle, left: Optional[Interval], right: Interval, eps: float,
                    l: int, cfg: TesterConfig, rng: Optional[np.random.Generator] = None,
                    direction: Optional[str] = None) -> Optional[int]:
    """Epoch search over ``left ∪ right`` returning the second element of a pair.

    The second element must lie in ``right``. ``direction`` (default
    ``cfg.fc_direction``) chooses (1,2) or (2,1) pairs. Per-block samples are
    ``c_fc * ceil(log2(log2 n) / eps)``.
    """
    rng = cfg.rng() if rng is None else rng
    up = (direction or cfg.fc_direction) in ("12", "(1,2)")
    if left is not None and left.hi > right.lo:
        raise UsageError("left part must end at or before the start of the right part")
    line = _Line(left, right) if left is not None else _Line(right)
    if not (line.a <= l <= right.hi):
        raise UsageError(f"anchor {l} outside the domain span")
    u = line.slot_of(l) if (left is None or l <= left.hi or l >= right.lo) else line.slot_of(right.lo)
    second_from = line.slot_of(right.lo)
    hit = _epoch_search(oracle, rng, line, u, fc_samples(oracle.n, eps, cfg), up, second_from)
    if hit is None:
        return None
    pa, va, pb, vb = hit
    if not _pair_ok(va, vb, up) or pb not in right:
        return None
    return pb


# -- binary searches -------------------------------------------------------------------

def standard_binary_search(oracle: QueryOracle, interval: Interval, low: float, high: float,
                           cfg: Optional[TesterConfig] = None, trace: Optional[list] = None
                           ) -> Optional[int]:
    """Search a nondecreasing run for a position with ``low < f(x) < high``.

    Probes ``x = a + floor(|I| / 3)``. A probe at or below ``low`` keeps the
    part right of ``x``; one at or above ``high`` keeps the part left of it.
    Because ``x`` itself is known to be outside the band it is dropped,
    which guarantees progress and ``|I'| <= 2|I|/3``.
    """
    a, b = interval.lo, interval.hi
    limit = math.ceil(math.log(max(len(interval), 2)) / math.log(1.5)) + 1
    for _ in range(limit):
        if a > b:
            return None
        x = a + (b - a + 1) // 3
        fx = oracle.query(x)
        if trace is not None:
            trace.append((a, b, x))
        if fx <= low:
            a = x + 1
        elif fx >= high:
            b = x - 1
        else:
            return x
    return None


def randomized_binary_search(oracle: QueryOracle, l: int, left: Interval, right: Interval,
                             i: int, j: int, eps: float, cfg: TesterConfig,
                             rng: Optional[np.random.Generator] = None,
                             fi: Optional[float] = None, fj: Optional[float] = None,
                             trace: Optional[list] = None) -> Optional[int]:
    """Adaptive search in ``right`` for ``k`` with ``f(i) < f(k) < f(j)``.

    Each of the ``c_bs * ceil(log2 n)`` iterations asks the coordinate finder
    for a probe in ``left ∪ I`` (with ``eps / ceil(log2 n)``), falling back to
    a uniform position of ``I``. ``I`` starts as the part of ``right`` after
    ``j``. A probe at or below ``f(i)`` keeps ``[x, b]``, one at or above
    ``f(j)`` keeps ``[a, x]``. ``fi`` and ``fj`` are the known values at ``i``
    and ``j``; they are queried when omitted.
    """
    rng = cfg.rng() if rng is None else rng
    n = oracle.n
    if fi is None:
        fi = oracle.query(i)
    if fj is None:
        fj = oracle.query(j)
    if not fi < fj:
        return None
    eps_fc = _inner_eps(eps, n)
    a, b = max(right.lo, j + 1), right.hi  # a witness needs k > j
    if a > b:
        return None
    for _ in range(bs_iterations(n, cfg)):
        x = find_coordinate(oracle, left, Interval(a, b), eps_fc, l, cfg, rng)
        if x is None:
            x = _uniform(rng, a, b)
        fx = oracle.query(x)
        if trace is not None:
            trace.append((a, b, x))
        if fx <= fi:
            a = x
        elif fx >= fj:
            b = x
        else:
            return x
        if a == b:
            return None  # the lone survivor is x, already known to be outside the band
    return None


# -- (1,3,2) testers ------------------------------------------------------------------

def test_132_gap1(oracle: QueryOracle, eps: float, cfg: TesterConfig,
                  rng: Optional[np.random.Generator] = None) -> Optional[Witness]:
    """Tester for inputs dominated by tuples whose widest gap is the first.

    Per random anchor ``l`` and window ``t``: find a (2,1) pair ``(j, k)``
    inside ``[l, l + 2^t]``, then sample ``i`` from ``[l - 2^t, l]`` looking
    for ``f(i) < f(k)``.
    """
    rng = cfg.rng() if rng is None else rng
    n = oracle.n
    inner = _inner_eps(eps, n)
    s_inner = epoch_samples(inner, cfg)
    s_left = left_samples(n, eps)
    for _ in range(outer_rounds(eps, cfg)):
        l = _uniform(rng, 1, n)
        for t in range(1, ceil_log2(n - l) + 1):
            R = clamp_interval(l, l + (1 << t), n)
            hit = _epoch_search(oracle, rng, _Line(R), 0, s_inner, up=False)
            if hit is None:
                continue
            j, fj, k, fk = hit
            if not fj > fk:
                continue
            L = clamp_interval(l - (1 << t), l, n)
            cand = _uniform(rng, L.lo, L.hi, s_left)
            vals = oracle.query_many(cand)
            good = np.flatnonzero((vals < fk) & (cand < j))
            if good.size:
                g = int(good[0])
                return Witness((int(cand[g]), j, k), P132)
    return None


def test_132_gap2(oracle: QueryOracle, eps: float, cfg: TesterConfig,
                  rng: Optional[np.random.Generator] = None) -> Optional[Witness]:
    """Tester for inputs dominated by tuples whose widest gap is the second.

    Per random anchor ``l`` and window ``t``: find a (1,2) pair ``(i, j)``
    inside ``[l - 2^t, l]``, then binary-search ``[l, l + 2^t]`` for the third
    element. A failed search moves on to the next anchor (or ends the run
    under ``strict_pseudocode``).
    """
    rng = cfg.rng() if rng is None else rng
    n = oracle.n
    inner = _inner_eps(eps, n)
    s_inner = epoch_samples(inner, cfg)
    for _ in range(outer_rounds(eps, cfg)):
        l = _uniform(rng, 1, n)
        for t in range(1, ceil_log2(n - l) + 1):
            L = clamp_interval(l - (1 << t), l, n)
            hit = _epoch_search(oracle, rng, _Line(L), l - L.lo, s_inner, up=True)
            if hit is None:
                continue
            i, fi, j, fj = hit
            if not fi < fj:
                continue
            R = clamp_interval(l, l + (1 << t), n)
            k = randomized_binary_search(oracle, l, L, R, i, j, eps, cfg, rng, fi, fj)
            if k is not None:
                fk = oracle.query(k)
                if fi < fk < fj and j < k:
                    return Witness((i, j, k), P132)
            if cfg.strict_pseudocode:
                return None
            break
    return None


def run_algo(oracle: QueryOracle, algo: str, cfg: TesterConfig) -> TestReport:
    """Run one tester and package the outcome; budget exhaustion yields accept."""
    if algo not in ALGOS:
        raise UsageError(f"unknown algo {algo!r}; choose from {', '.join(ALGOS)}")
    rng = cfg.rng()
    eps = cfg.epsilon
    start_q = oracle.query_count
    t0 = time.perf_counter()
    witness = None
    phases: dict[str, int] = {}
    exhausted = False
    try:
        if algo in ("mono12", "mono21"):
            witness = test_monotone(oracle, algo[-2:], eps, cfg, rng)
            phases[algo] = oracle.query_count - start_q
        else:
            if algo in ("gap1", "full"):
                q0 = oracle.query_count
                try:
                    witness = test_132_gap1(oracle, eps, cfg, rng)
                finally:
                    phases["gap1"] = oracle.query_count - q0
            if witness is None and algo in ("gap2", "full"):
                q0 = oracle.query_count
                try:
                    witness = test_132_gap2(oracle, eps, cfg, rng)
                finally:
                    phases["gap2"] = oracle.query_count - q0
    except QueryBudgetExceeded:
        exhausted = True
        witness = None
    elapsed = time.perf_counter() - t0
    return TestReport(
        verdict="reject" if witness is not None else "accept",
        witness=witness,
        queries=oracle.query_count - start_q,
        epsilon=eps,
        n=oracle.n,
        seed=int(cfg.seed),
        elapsed=elapsed,
        algo=algo,
        phase_queries=phases,
        budget_exhausted=exhausted,
    )


def test_132(oracle: QueryOracle, eps: float, cfg: TesterConfig) -> TestReport:
    """Gap-1 tester followed by the gap-2 tester; rejects on the first witness."""
    if eps != cfg.epsilon:
        cfg = TesterConfig(**{**cfg.to_dict(), "epsilon": eps})
    return run_algo(oracle, "full", cfg)
