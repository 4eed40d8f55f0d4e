"""Instance construction with certified distance lower bounds.

Planted instances cut ``[n]`` into equal slots. Every slot holds one planted
occurrence and its values sit in a band above all later slots, so no
occurrence spans two slots. Inside a slot the non-planted positions are
arranged so that every extra occurrence shares a position with the plant,
which makes the distance exactly one deletion per slot.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .core import P12, P132, PatternSpec, Sequence, UsageError
from .exact_oracle import TupleFamily, classify_gaps, distance_bounds

__all__ = [
    "InstanceRecord",
    "ParameterError",
    "gen_132_avoiding",
    "gen_planted_far",
    "gen_gap_controlled",
    "gen_uniform_random_perm",
    "gen_monotone",
    "make_instance",
    "parse_gen_spec",
    "KINDS",
]


class ParameterError(UsageError):
    """Generator parameters that cannot produce the requested instance."""


@dataclass
class InstanceRecord:
    """A generated sequence with its certification metadata.

    ``certified_far_lower`` is a guaranteed lower bound on distance / n, or
    ``None`` until :meth:`certify` computes it from a greedy disjoint family.
    """

    sequence: Sequence
    certified_far_lower: Optional[float]
    planted_family: Optional[TupleFamily]
    dominating_gap: Optional[int]
    seed: int
    generator_name: str
    params: dict = field(default_factory=dict)

    def certify(self, pattern: PatternSpec = P132) -> float:
        if self.certified_far_lower is None:
            self.certified_far_lower = distance_bounds(self.sequence, pattern)[0] / self.sequence.n
        return self.certified_far_lower

    def to_dict(self) -> dict:
        return {
            "generator_name": self.generator_name,
            "n": self.sequence.n,
            "seed": self.seed,
            "params": dict(self.params),
            "certified_far_lower": self.certified_far_lower,
            "dominating_gap": self.dominating_gap,
            "planted_family": None if self.planted_family is None else self.planted_family.to_dict(),
        }


def _rng(seed: int) -> np.random.Generator:
    return np.random.default_rng(int(seed) & ((1 << 64) - 1))


def gen_132_avoiding(n: int, seed: int) -> InstanceRecord:
    """Random (1,3,2)-avoiding permutation of ``1..n``.

    Puts the current maximum at a uniform position, gives everything to its
    left larger values than everything to its right, and recurses on both
    sides. Every (1,3,2)-avoiding permutation has positive probability.
    """
    if n < 1:
        raise ParameterError("n must be at least 1")
    u = _rng(seed).random(n).tolist()  # one draw per placed maximum
    vals = np.zeros(n, dtype=np.int64)
    stack = [(0, n - 1, n)]  # (first, last, largest value for this segment)
    while stack:
        a, b, top = stack.pop()
        if a > b:
            continue
        m = a + int(u.pop() * (b - a + 1))
        vals[m] = top
        stack.append((a, m - 1, top - 1))
        stack.append((m + 1, b, top - 1 - (m - a)))
    return InstanceRecord(Sequence(vals), 0.0, None, None, int(seed), "avoid132", {"n": n})


def _plant_count(n: int, eps: float, k: int) -> int:
    if not 0 <= eps <= 1:
        raise ParameterError(f"epsilon must lie in [0, 1], got {eps}")
    if eps == 0:
        return 0
    if eps * n < k:
        raise ParameterError(f"epsilon * n = {eps * n:g} is below {k}; need n >= {k}/epsilon")
    return int(np.ceil(eps * n / k - 1e-9))


def _slots(n: int, count: int) -> list[tuple[int, int]]:
    """``count`` consecutive 0-based slots covering ``[0, n)``; the last absorbs the remainder."""
    w = n // count
    return [(s * w, n if s == count - 1 else (s + 1) * w) for s in range(count)]


def _assemble(n: int, slot_orders: list[list[int]]) -> Sequence:
    """Values from a global high-to-low position order (slots in order)."""
    vals = np.zeros(n, dtype=np.int64)
    rank = n
    for order in slot_orders:
        for p in order:
            vals[p] = rank
            rank -= 1
    return Sequence(vals)


def _planted(n: int, eps: float, seed: int, geometry: str, name: str) -> InstanceRecord:
    k = 2 if geometry == "pair" else 3
    count = _plant_count(n, eps, k)
    rng = _rng(seed)
    params = {"n": n, "epsilon": eps}
    if count == 0:
        seq = Sequence(np.arange(n, 0, -1))
        return InstanceRecord(seq, 0.0, None, None, int(seed), name, params)
    slots = _slots(n, count)
    w = n // count
    # offsets (relative to the plant start) and slot span needed
    if geometry == "contiguous":
        need = 3
    elif geometry == "gap2":
        need = 5  # (p, p+1, p+4) at the smallest spacing
    elif geometry == "gap1":
        need = 4  # (p, p+2, p+3)
    else:
        need = 2
    if w < need:
        raise ParameterError(f"{count} plants need slots of width >= {need}, got {w}; "
                             "lower epsilon or raise n")
    orders, tuples = [], []
    for lo_pos, hi_pos in slots:
        width = hi_pos - lo_pos
        if geometry == "contiguous":
            offs = (0, 1, 2)
        elif geometry == "gap2":
            s = int(rng.integers(2, int(np.log2(width - 1)) + 1))
            offs = (0, 1, 2 ** s)
        elif geometry == "gap1":
            s = int(rng.integers(1, int(np.log2(width - 2)) + 1))
            offs = (0, 2 ** s, 2 ** s + 1)
        else:
            d = int(rng.integers(1, min(16, width - 1) + 1))
            offs = (0, d)
        p = lo_pos + int(rng.integers(0, width - offs[-1]))
        pos = tuple(p + o for o in offs)
        before = list(range(lo_pos, p))
        if k == 3:
            low, high, mid = pos
            rest = [q for q in range(p + 1, hi_pos) if q not in pos]
            order = before + [high, mid, low] + rest
        else:
            low, high = pos
            between = list(range(low + 1, high))
            order = before + between + [high, low] + list(range(high + 1, hi_pos))
        orders.append(order)
        tuples.append(tuple(q + 1 for q in pos))
    seq = _assemble(n, orders)
    pattern = P12 if k == 2 else P132
    fam = TupleFamily(pattern, tuple(tuples))
    gaps = classify_gaps(fam) if k == 3 else {}
    dom = max(gaps, key=gaps.get) if gaps else None
    return InstanceRecord(seq, count / n, fam, dom, int(seed), name, params)


def gen_planted_far(n: int, eps: float, seed: int, pattern: PatternSpec = P132) -> InstanceRecord:
    """Decreasing backbone with ``ceil(eps n / k)`` planted occurrences.

    For (1,3,2) each plant is a contiguous low-high-mid triple; for (1,2) it
    is a low-high pair at a random distance of at most 16. The certified
    bound is ``plants / n >= eps / k``.
    """
    if pattern == P132:
        return _planted(n, eps, seed, "contiguous", "planted")
    if pattern == P12:
        return _planted(n, eps, seed, "pair", "planted12")
    raise ParameterError(f"no planted generator for pattern {pattern}")


def gen_gap_controlled(n: int, eps: float, c: int, seed: int) -> InstanceRecord:
    """Planted (1,3,2) instance whose plants all have gap class ``c``.

    ``c=2`` plants ``(p, p+1, p+2^s)`` with ``s >= 2``; ``c=1`` plants
    ``(p, p+2^s, p+2^s+1)`` with ``s >= 1``. ``s`` is drawn per slot.
    """
    if c not in (1, 2):
        raise ParameterError(f"gap class must be 1 or 2, got {c}")
    rec = _planted(n, eps, seed, f"gap{c}", f"gap{c}")
    rec.params["c"] = c
    return rec


def gen_uniform_random_perm(n: int, seed: int) -> InstanceRecord:
    """Uniform random permutation of ``1..n``; certification is computed on demand."""
    if n < 1:
        raise ParameterError("n must be at least 1")
    seq = Sequence(_rng(seed).permutation(n) + 1)
    return InstanceRecord(seq, None, None, None, int(seed), "perm", {"n": n})


def gen_monotone(n: int, direction: str) -> InstanceRecord:
    """``1..n`` in increasing (``"inc"``) or decreasing (``"dec"``) order."""
    if n < 1:
        raise ParameterError("n must be at least 1")
    if direction not in ("inc", "dec"):
        raise ParameterError(f"direction must be 'inc' or 'dec', got {direction!r}")
    vals = np.arange(1, n + 1) if direction == "inc" else np.arange(n, 0, -1)
    return InstanceRecord(Sequence(vals), 0.0, None, None, 0, direction, {"n": n})


KINDS = ("avoid132", "planted", "planted12", "gap1", "gap2", "perm", "inc", "dec")


def make_instance(kind: str, n: int, eps: float = 0.1, seed: int = 0) -> InstanceRecord:
    """Dispatch on a generator kind name (see ``KINDS``)."""
    if kind == "avoid132":
        return gen_132_avoiding(n, seed)
    if kind == "planted":
        return gen_planted_far(n, eps, seed)
    if kind == "planted12":
        return gen_planted_far(n, eps, seed, P12)
    if kind in ("gap1", "gap2"):
        return gen_gap_controlled(n, eps, int(kind[-1]), seed)
    if kind == "perm":
        return gen_uniform_random_perm(n, seed)
    if kind in ("inc", "dec"):
        return gen_monotone(n, kind)
    raise ParameterError(f"unknown generator kind {kind!r}; choose from {', '.join(KINDS)}")


def parse_gen_spec(text: str) -> dict:
    """Parse ``"kind:n=4096,eps=0.1"`` into ``{"kind": ..., "n": ..., "eps": ...}``."""
    kind, _, rest = text.partition(":")
    kind = kind.strip()
    if kind not in KINDS:
        raise ParameterError(f"unknown generator kind {kind!r}; choose from {', '.join(KINDS)}")
    out: dict = {"kind": kind}
    for item in filter(None, (s.strip() for s in rest.split(","))):
        key, eq, val = item.partition("=")
        key = key.strip()
        if not eq or key not in ("n", "eps", "epsilon", "seed"):
            raise ParameterError(f"bad generator parameter {item!r}; expected n=, eps= or seed=")
        try:
            if key == "n":
                out["n"] = int(val)
            elif key == "seed":
                out["seed"] = int(val)
            else:
                out["eps"] = float(val)
        except ValueError:
            raise ParameterError(f"bad value in {item!r}") from None
    if "n" not in out:
        raise ParameterError(f"generator spec {text!r} is missing n=")
    return out
