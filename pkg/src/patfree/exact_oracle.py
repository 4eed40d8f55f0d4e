"""Full-access ground truth: pattern search, disjoint families, densities, distances.

Everything here reads the whole sequence and is meant for verification and
experiment bookkeeping, never for the testers themselves. Positions are
1-based; families are stored as sorted tuples of index tuples.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Optional, Union

import numpy as np

from .core import (
    P12,
    P21,
    P132,
    Interval,
    PatternSpec,
    Sequence,
    UsageError,
    Witness,
    ceil_log2,
    clamp_interval,
)

__all__ = [
    "TupleFamily",
    "DensityProfile",
    "CrossingResult",
    "find_pattern_exhaustive",
    "find_132_linear",
    "is_free",
    "greedy_disjoint_tuples_lr",
    "greedy_disjoint_tuples_plus",
    "gap_of_tuple",
    "classify_gaps",
    "width",
    "density_profile",
    "cumulative_densities",
    "crossing_monotone_check",
    "gamma_deserted_indices",
    "deserted_bound",
    "exact_distance_to_free",
    "distance_bounds",
    "refill",
    "crossing_third_elements",
    "monotone_crossing_density",
    "EXACT_DISTANCE_MAX_N",
]

EXACT_DISTANCE_MAX_N = 20


@dataclass(frozen=True)
class TupleFamily:
    """Pairwise-disjoint pattern occurrences, kept sorted by index tuple."""

    pattern: PatternSpec
    tuples: tuple[tuple[int, ...], ...] = ()

    def __post_init__(self):
        tups = tuple(sorted(tuple(int(x) for x in t) for t in self.tuples))
        object.__setattr__(self, "tuples", tups)
        seen: set[int] = set()
        for t in tups:
            Witness(t, self.pattern)  # shape check: length and increasing indices
            if seen.intersection(t):
                raise UsageError(f"tuple {t} shares a position with another member")
            seen.update(t)

    @property
    def support(self) -> frozenset[int]:
        """Union of all member positions."""
        return frozenset(i for t in self.tuples for i in t)

    def __len__(self) -> int:
        return len(self.tuples)

    def __iter__(self):
        return iter(self.tuples)

    def witnesses(self) -> list[Witness]:
        return [Witness(t, self.pattern) for t in self.tuples]

    def invalid_members(self, f: Sequence) -> list[tuple[int, ...]]:
        """Members that do not realize the pattern in ``f``."""
        return [w.indices for w in self.witnesses() if not w.is_valid(f)]

    def to_dict(self) -> dict:
        return {"pattern": self.pattern.name, "tuples": [list(t) for t in self.tuples]}


@dataclass
class DensityProfile:
    """Per-width densities around one anchor and their sum."""

    anchor: int
    deltas: dict[int, float] = field(default_factory=dict)
    counts: dict[int, int] = field(default_factory=dict)

    @property
    def cumulative(self) -> float:
        return float(sum(self.deltas.values()))

    def to_dict(self) -> dict:
        return {
            "anchor": self.anchor,
            "deltas": {str(t): d for t, d in sorted(self.deltas.items())},
            "cumulative": self.cumulative,
        }


@dataclass(frozen=True)
class CrossingResult:
    """Outcome of the crossing check; falsy when a violation was found."""

    ok: bool
    counterexample: Optional[tuple[int, int, int]] = None  # (l, k1, k2)

    def __bool__(self) -> bool:
        return self.ok


# -- pattern search ------------------------------------------------------------

def _first_pair(v: np.ndarray, alive: np.ndarray, up: bool) -> Optional[tuple[int, int]]:
    """Lexicographically first (i, j), 0-based, among alive positions."""
    idx = np.flatnonzero(alive)
    if idx.size < 2:
        return None
    w = v[idx]
    if up:
        later = np.maximum.accumulate(w[::-1])[::-1]
    else:
        later = -np.maximum.accumulate((-w)[::-1])[::-1]
    # later[a + 1] is the extreme value strictly after slot a
    hit = (later[1:] > w[:-1]) if up else (later[1:] < w[:-1])
    cand = np.flatnonzero(hit)
    if cand.size == 0:
        return None
    a = int(cand[0])
    rest = w[a + 1:]
    b = a + 1 + int(np.flatnonzero(rest > w[a] if up else rest < w[a])[0])
    return int(idx[a]), int(idx[b])


def _first_132_from(v: np.ndarray, alive: np.ndarray, i: int) -> Optional[tuple[int, int]]:
    """Lexicographically first (j, k), 0-based, completing a (1,3,2) with fixed ``i``."""
    idx = i + 1 + np.flatnonzero(alive[i + 1:])
    if idx.size < 2:
        return None
    w = v[idx]
    above = w > v[i]
    masked = np.where(above, w, np.inf)
    # smallest above-f(i) value strictly after each slot
    after = np.minimum.accumulate(masked[::-1])[::-1]
    after = np.append(after[1:], np.inf)
    cand = np.flatnonzero(above & (after < w))
    if cand.size == 0:
        return None
    a = int(cand[0])
    tail = w[a + 1:]
    b = a + 1 + int(np.flatnonzero((tail > v[i]) & (tail < w[a]))[0])
    return int(idx[a]), int(idx[b])


def _first_witness(v: np.ndarray, alive: np.ndarray, pattern: PatternSpec):
    if pattern == P12 or pattern == P21:
        return _first_pair(v, alive, up=(pattern == P12))
    for i in np.flatnonzero(alive):
        jk = _first_132_from(v, alive, int(i))
        if jk is not None:
            return (int(i),) + jk
    return None


def find_pattern_exhaustive(f: Sequence, pattern: PatternSpec) -> Optional[Witness]:
    """Lexicographically first occurrence of ``pattern`` in ``f``, or ``None``.

    Quadratic for (1,3,2); use :func:`is_free` for a linear-time membership check.
    """
    hit = _first_witness(f.values, np.ones(f.n, dtype=bool), pattern)
    if hit is None:
        return None
    return Witness(tuple(i + 1 for i in hit), pattern)


def find_132_linear(f: Sequence) -> Optional[Witness]:
    """Some (1,3,2) occurrence in linear time (not necessarily the first).

    Right-to-left stack scan: ``third`` is the largest value popped so far,
    i.e. a value with a strictly larger entry to its left.
    """
    v = f.values
    stack: list[int] = []
    third = -np.inf
    third_at = third_by = -1
    for p in range(f.n - 1, -1, -1):
        if v[p] < third:
            return Witness((p + 1, third_by + 1, third_at + 1), P132)
        while stack and v[stack[-1]] < v[p]:
            q = stack.pop()
            if v[q] > third:
                third, third_at, third_by = v[q], q, p
        stack.append(p)
    return None


def is_free(f: Sequence, pattern: PatternSpec) -> bool:
    """Linear-time freeness check."""
    d = np.diff(f.values)
    if pattern == P12:
        return bool(np.all(d <= 0))
    if pattern == P21:
        return bool(np.all(d >= 0))
    return find_132_linear(f) is None


# -- disjoint families -----------------------------------------------------------

def greedy_disjoint_tuples_lr(f: Sequence, pattern: PatternSpec) -> TupleFamily:
    """Left-to-right greedy: repeatedly take the first occurrence among unused positions.

    Removing positions never creates an occurrence, so the first index of the
    next chosen tuple is never smaller than the previous one; a single pass
    over the first index is therefore the same as restarting the search.
    """
    v = f.values
    alive = np.ones(f.n, dtype=bool)
    out = []
    if pattern == P132:
        for i in range(f.n):
            if not alive[i]:
                continue
            jk = _first_132_from(v, alive, i)
            if jk is not None:
                t = (i,) + jk
                alive[list(t)] = False
                out.append(tuple(x + 1 for x in t))
    else:
        up = pattern == P12
        for i in range(f.n):
            if not alive[i]:
                continue
            rest = np.flatnonzero(alive[i + 1:] & ((v[i + 1:] > v[i]) if up else (v[i + 1:] < v[i])))
            if rest.size:
                j = i + 1 + int(rest[0])
                alive[[i, j]] = False
                out.append((i + 1, j + 1))
    return TupleFamily(pattern, tuple(out))


def greedy_disjoint_tuples_plus(f: Sequence, family: TupleFamily,
                                reading: str = "indices") -> TupleFamily:
    """Right-to-left greedy regrouping of a disjoint (1,3,2) family.

    Repeatedly takes the largest unused support position as ``k``, then the
    largest unused ``j`` that completes some (1,3,2) with ``k``, then the
    largest unused ``i`` for that ``(j, k)``. A ``k`` with no completing pair
    is dropped.

    ``reading="indices"`` lets ``i`` and ``j`` be any unused support positions.
    ``reading="pairs"`` only considers ``(i, j)`` that are the first two
    entries of one original tuple, both still unused.
    """
    if family.pattern != P132:
        raise UsageError("greedy_disjoint_tuples_plus needs a (1,3,2) family")
    if reading not in ("indices", "pairs"):
        raise UsageError(f"unknown reading {reading!r}; use 'indices' or 'pairs'")
    v = f.values
    for t in family.tuples:
        if t[-1] > f.n:
            raise UsageError(f"tuple {t} outside [1, {f.n}]")
    remaining = set(family.support)
    prefix_pairs = [(t[0], t[1]) for t in family.tuples]
    out = []
    while remaining:
        k = max(remaining)
        remaining.discard(k)
        fk = v[k - 1]
        if reading == "indices":
            lows = [i for i in remaining if i < k and v[i - 1] < fk]
            if not lows:
                continue
            first_low = min(lows)
            highs = [j for j in remaining if first_low < j < k and v[j - 1] > fk]
            if not highs:
                continue
            j = max(highs)
        else:
            highs = [b for a, b in prefix_pairs
                     if a in remaining and b in remaining and b < k
                     and v[a - 1] < fk < v[b - 1]]
            if not highs:
                continue
            j = max(highs)
        i = max(a for a in remaining if a < j and v[a - 1] < fk)
        remaining.difference_update((i, j))
        out.append((i, j, k))
    return TupleFamily(P132, tuple(out))


# -- gaps and densities ------------------------------------------------------------

def _indices(t: Union[Witness, Iterable[int]]) -> tuple[int, ...]:
    return t.indices if isinstance(t, Witness) else tuple(int(x) for x in t)


def gap_of_tuple(t: Union[Witness, Iterable[int]]) -> int:
    """Smallest 1-based ``m`` maximizing ``i_{m+1} - i_m``."""
    idx = _indices(t)
    if len(idx) < 2:
        raise UsageError("a gap needs at least two indices")
    diffs = [b - a for a, b in zip(idx, idx[1:])]
    return diffs.index(max(diffs)) + 1


def classify_gaps(family: TupleFamily) -> dict[int, int]:
    """Tuple counts per gap class; classes with no members are omitted."""
    out: dict[int, int] = {}
    for t in family.tuples:
        c = gap_of_tuple(t)
        out[c] = out.get(c, 0) + 1
    return dict(sorted(out.items()))


def width(a: int, b: int) -> int:
    """``ceil(log2(b - a))`` for ``a < b``; adjacent positions have width 0."""
    if b <= a:
        raise UsageError(f"width needs a < b, got ({a}, {b})")
    return ceil_log2(b - a)


def _gap_pairs(family: TupleFamily):
    for t in family.tuples:
        m = gap_of_tuple(t)
        a, b = t[m - 1], t[m]
        yield a, b, b - a, width(a, b)


def density_profile(f: Sequence, family: TupleFamily, l: int) -> DensityProfile:
    """Densities of gap pairs bracketing anchor ``l``, per width.

    A tuple counts at width ``t`` when its gap pair ``(a, b)`` has width ``t``
    and ``a - g/3 <= l <= b + g/3`` with ``g = b - a`` (real comparison).
    """
    if not 1 <= l <= f.n:
        raise UsageError(f"anchor {l} outside [1, {f.n}]")
    prof = DensityProfile(anchor=l)
    for a, b, g, t in _gap_pairs(family):
        if 3 * a - g <= 3 * l <= 3 * b + g:
            prof.counts[t] = prof.counts.get(t, 0) + 1
    prof.deltas = {t: c / 2 ** (t + 1) for t, c in sorted(prof.counts.items())}
    return prof


def cumulative_densities(f: Sequence, family: TupleFamily) -> np.ndarray:
    """``v_l`` for every anchor at once; entry ``l - 1`` belongs to anchor ``l``.

    Contributions are dyadic, so the float sums are exact.
    """
    diff = np.zeros(f.n + 2)
    for a, b, g, t in _gap_pairs(family):
        lo = max(1, -((g - 3 * a) // 3))  # ceil((3a - g) / 3)
        hi = min(f.n, (3 * b + g) // 3)
        if lo <= hi:
            w = 1.0 / 2 ** (t + 1)
            diff[lo] += w
            diff[hi + 1] -= w
    return np.cumsum(diff)[1:f.n + 1]


def crossing_monotone_check(family: TupleFamily, f: Sequence) -> CrossingResult:
    """Check that third elements of tuples crossing any anchor rise with position.

    Tuples ``(i, j, k)`` cross ``l`` when ``j <= l <= k``. Two crossing tuples
    with ``k1 < k2`` and ``f(k1) > f(k2)`` are a violation; the result carries
    the violation with the smallest ``l``, then ``k1``, then ``k2``.
    """
    v = f.values
    tups = sorted(family.tuples, key=lambda t: t[2])
    best = None
    for x in range(len(tups)):
        _, j1, k1 = tups[x]
        for y in range(x + 1, len(tups)):
            _, j2, k2 = tups[y]
            l = max(j1, j2)
            if l <= k1 and v[k1 - 1] > v[k2 - 1]:
                cand = (l, k1, k2)
                if best is None or cand < best:
                    best = cand
    return CrossingResult(ok=best is None, counterexample=best)


def crossing_third_elements(family: TupleFamily, l: int, window: Interval) -> list[int]:
    """Third elements of tuples fully inside ``window`` with ``j <= l <= k``."""
    return sorted(k for i, j, k in family.tuples
                  if j <= l <= k and i >= window.lo and k <= window.hi)


def monotone_crossing_density(family: TupleFamily, l: int, t: int, n: int) -> float:
    """Crossing third elements per position of the window ``[l - 2^t, l + 2^t]``."""
    win = clamp_interval(l - 2 ** t, l + 2 ** t, n)
    if win is None:
        return 0.0
    return len(crossing_third_elements(family, l, win)) / len(win)


# -- deserted elements ---------------------------------------------------------------

def _as_fraction(x) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, int):
        return Fraction(x)
    return Fraction(str(float(x)))  # decimal reading: 0.05 means 1/20


def gamma_deserted_indices(S: Iterable[int], I: Interval, gamma) -> frozenset[int]:
    """Members ``i`` of ``S`` lying in some ``J = [a, b] ⊆ I`` with ``|S ∩ J| < gamma |J|``.

    For each left end ``a`` the qualifying right ends form a set whose largest
    element ``bmax`` covers every deserted position reachable from ``a``, so
    one sweep over ``a`` suffices. The comparison is exact in rationals.
    """
    S = sorted(set(int(s) for s in S))
    if any(s not in I for s in S):
        raise UsageError("S must be a subset of I")
    g = _as_fraction(gamma)
    if not 0 <= g < 1:
        raise UsageError(f"gamma must lie in [0, 1), got {gamma}")
    m = len(I)
    ind = np.zeros(m, dtype=np.int64)
    ind[np.array(S, dtype=np.int64) - I.lo] = 1
    pref = np.concatenate(([0], np.cumsum(ind)))
    p, q = g.numerator, g.denominator
    cover = np.zeros(m + 1, dtype=np.int64)
    lengths = np.arange(1, m + 1, dtype=np.int64)
    for a in range(m):
        cnt = pref[a + 1:] - pref[a]
        bad = np.flatnonzero(q * cnt < p * lengths[: m - a])
        if bad.size:
            cover[a] += 1
            cover[a + int(bad[-1]) + 1] -= 1
    covered = np.cumsum(cover)[:m] > 0
    return frozenset(s for s in S if covered[s - I.lo])


def deserted_bound(size_s: int, size_i: int, gamma) -> Fraction:
    """``3 gamma (1 - eps) |I| / (1 - gamma)`` with ``eps = |S| / |I|``."""
    g = _as_fraction(gamma)
    return 3 * g * (size_i - size_s) / (1 - g)


# -- distance ---------------------------------------------------------------------------

def _hit_all(vals: list[float], pattern: PatternSpec, alive: np.ndarray, budget: int) -> bool:
    """Can ``budget`` more deletions make the alive positions pattern-free?"""
    hit = _first_witness(np.asarray(vals), alive, pattern)
    if hit is None:
        return True
    if budget == 0:
        return False
    for p in hit:
        alive[p] = False
        ok = _hit_all(vals, pattern, alive, budget - 1)
        alive[p] = True
        if ok:
            return True
    return False


def exact_distance_to_free(f: Sequence, pattern: PatternSpec) -> int:
    """Minimum number of deletions leaving ``f`` pattern-free (``n <= 20``).

    Iterative deepening from the greedy disjoint-family lower bound; each
    level branches on the positions of one surviving occurrence, which any
    solution must hit.
    """
    if f.n > EXACT_DISTANCE_MAX_N:
        raise UsageError(f"exact distance is limited to n <= {EXACT_DISTANCE_MAX_N}; "
                         "use distance_bounds for longer sequences")
    vals = f.values.tolist()
    d = len(greedy_disjoint_tuples_lr(f, pattern))
    alive = np.ones(f.n, dtype=bool)
    while not _hit_all(vals, pattern, alive, d):
        d += 1
    return d


def distance_bounds(f: Sequence, pattern: PatternSpec) -> tuple[int, int]:
    """``(|T|, k |T|)`` for the left-to-right greedy family ``T``."""
    t = len(greedy_disjoint_tuples_lr(f, pattern))
    return t, pattern.k * t


def refill(f: Sequence, positions: Iterable[int], pattern: PatternSpec) -> Sequence:
    """Overwrite ``positions`` to remove every occurrence supported on them.

    Each listed position takes the value of the nearest earlier unlisted
    position. Listed positions before any unlisted one take the global
    maximum, or the global minimum when the pattern starts with its largest
    entry (a leading maximum would itself start a (2,1)).
    """
    drop = set(int(p) for p in positions)
    v = f.values
    fill = float(v.max()) if pattern.perm[0] < pattern.k else float(v.min())
    out = []
    last = None
    for p in range(1, f.n + 1):
        if p in drop:
            out.append(fill if last is None else last)
        else:
            last = float(v[p - 1])
            out.append(last)
    return Sequence(out)

