"""Compiled epoch search, used when the oracle is a plain counting oracle.

Mirrors the numpy implementation in :mod:`patfree.testers` draw for draw:
the same generator is consumed in the same order, so both paths return the
same pair and charge the same number of queries. Without numba the numpy
path is used everywhere.
"""

from __future__ import annotations

import numpy as np

try:
    import numba
except ImportError:  # pragma: no cover - exercised only without numba installed
    numba = None

FOUND, NOT_FOUND, OVER_BUDGET = 0, 1, 2


def _epoch_core(values, a0, len_first, c0, length, u, epochs, samples, up, second_from,
                remaining, rng):
    """Returns ``(status, used, pos_a, val_a, pos_b, val_b)``; positions are 1-based."""
    base = max(0, u - (1 << epochs))
    top = min(length, u + (1 << epochs) + 1)
    seen = np.full(top - base, np.nan)
    used = 0
    for t in range(1, epochs + 1):
        r = 1 << t
        lo = max(0, u - r)
        hi = min(length - 1, u + r)
        if used + 2 * samples > remaining:
            return OVER_BUDGET, used, 0, 0.0, 0, 0.0
        wl = u - lo + 1
        for _ in range(samples):
            x = lo + int(rng.random() * wl)
            pos = a0 + x if x < len_first else c0 + (x - len_first)
            seen[x - base] = values[pos - 1]
        wr = hi - u + 1
        for _ in range(samples):
            x = u + int(rng.random() * wr)
            pos = a0 + x if x < len_first else c0 + (x - len_first)
            seen[x - base] = values[pos - 1]
        used += 2 * samples
        # prefix extreme over seen points; candidates are seen b beating it
        best_b = -1
        best_d = 1 << 62
        ext = np.nan
        for x in range(lo, hi + 1):
            v = seen[x - base]
            if v != v:
                continue
            if ext == ext and x >= second_from and ((ext < v) if up else (ext > v)):
                d = abs(x - u)
                if d < best_d:
                    best_d = d
                    best_b = x
            if ext != ext or ((v < ext) if up else (v > ext)):
                ext = v
        if best_b < 0:
            continue
        target = np.nan
        for x in range(lo, best_b):
            v = seen[x - base]
            if v == v and (target != target or ((v < target) if up else (v > target))):
                target = v
        best_a = lo
        for x in range(lo, best_b):
            if seen[x - base] == target:
                best_a = x
                break
        pa = a0 + best_a if best_a < len_first else c0 + (best_a - len_first)
        pb = a0 + best_b if best_b < len_first else c0 + (best_b - len_first)
        return FOUND, used, pa, target, pb, seen[best_b - base]
    return NOT_FOUND, used, 0, 0.0, 0, 0.0


if numba is not None:
    epoch_core = numba.njit(cache=True, nogil=True)(_epoch_core)
else:  # pragma: no cover
    epoch_core = None
