"""Sequences, patterns, witnesses, intervals and counted query access.

Positions are 1-based everywhere, matching the ``[n]`` convention of the
testers. Values are real numbers; ties are allowed but, since every pattern
relation is a strict inequality, tied entries never realize a pattern.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence as _Seq

import numpy as np

__all__ = [
    "Sequence",
    "PatternSpec",
    "P12",
    "P21",
    "P132",
    "Witness",
    "Interval",
    "clamp_interval",
    "QueryOracle",
    "MemoizingOracle",
    "QueryBudgetExceeded",
    "UsageError",
    "TestReport",
    "ceil_log2",
    "parse_sequence",
    "format_sequence",
    "format_value",
    "read_sequence",
    "write_sequence",
]


class UsageError(ValueError):
    """Invalid argument: out-of-range index, unsupported pattern, bad input."""


class QueryBudgetExceeded(RuntimeError):
    """Raised when an oracle with a query budget is asked for one probe too many."""


def ceil_log2(x: float) -> int:
    """``ceil(log2(x))`` with ``x <= 1`` mapped to 0."""
    if x <= 1:
        return 0
    if float(x).is_integer():
        return (int(x) - 1).bit_length()
    return math.ceil(math.log2(x))


class Sequence:
    """Immutable real-valued sequence ``f: [n] -> R``.

    ``seq[i]`` reads position ``i`` (1-based). ``seq.values`` is a read-only
    float64 array where ``values[i - 1] == seq[i]``.
    """

    __slots__ = ("_values",)

    def __init__(self, values: Iterable[float]):
        arr = np.array(list(values) if not isinstance(values, np.ndarray) else values,
                       dtype=np.float64).ravel()
        if arr.size == 0:
            raise UsageError("a sequence needs at least one entry")
        if not np.all(np.isfinite(arr)):
            raise UsageError("sequence entries must be finite reals")
        arr.flags.writeable = False
        self._values = arr

    @property
    def values(self) -> np.ndarray:
        return self._values

    @property
    def n(self) -> int:
        return int(self._values.size)

    def __len__(self) -> int:
        return self.n

    def __getitem__(self, i: int) -> float:
        if not 1 <= i <= self.n:
            raise UsageError(f"index {i} outside [1, {self.n}]")
        return float(self._values[i - 1])

    def __eq__(self, other: object) -> bool:
        return isinstance(other, Sequence) and np.array_equal(self._values, other._values)

    def __hash__(self) -> int:
        return hash(self._values.tobytes())

    def __repr__(self) -> str:
        head = ", ".join(format_value(v) for v in self._values[:8])
        more = ", ..." if self.n > 8 else ""
        return f"Sequence([{head}{more}], n={self.n})"

    def tolist(self) -> list[float]:
        return self._values.tolist()

    def restrict(self, positions: Iterable[int]) -> "Sequence":
        """Subsequence at the given positions, in increasing position order."""
        idx = np.array(sorted(positions), dtype=np.int64) - 1
        return Sequence(self._values[idx])


@dataclass(frozen=True)
class PatternSpec:
    """A supported permutation pattern: (1,2), (2,1) or (1,3,2)."""

    perm: tuple[int, ...]

    _SUPPORTED = {(1, 2), (2, 1), (1, 3, 2)}

    def __post_init__(self):
        perm = tuple(int(p) for p in self.perm)
        object.__setattr__(self, "perm", perm)
        if sorted(perm) != list(range(1, len(perm) + 1)):
            raise UsageError(f"{perm} is not a permutation of 1..{len(perm)}")
        if perm not in self._SUPPORTED:
            raise UsageError(f"unsupported pattern {perm}; use (1,2), (2,1) or (1,3,2)")

    @property
    def k(self) -> int:
        return len(self.perm)

    @property
    def name(self) -> str:
        return "".join(str(p) for p in self.perm)

    @classmethod
    def parse(cls, text: str) -> "PatternSpec":
        """Accepts ``"132"``, ``"1,3,2"`` or ``"(1,3,2)"``."""
        digits = [c for c in str(text) if c.isdigit()]
        if not digits:
            raise UsageError(f"cannot parse pattern {text!r}")
        return cls(tuple(int(c) for c in digits))

    def matches(self, vals: _Seq[float]) -> bool:
        """True iff ``vals`` (already in index order) has exactly this order pattern."""
        k = self.k
        if len(vals) != k:
            return False
        for a in range(k):
            for b in range(k):
                if self.perm[a] < self.perm[b] and not vals[a] < vals[b]:
                    return False
        return True

    def __str__(self) -> str:
        return "(" + ",".join(str(p) for p in self.perm) + ")"


P12 = PatternSpec((1, 2))
P21 = PatternSpec((2, 1))
P132 = PatternSpec((1, 3, 2))


@dataclass(frozen=True)
class Witness:
    """Index tuple realizing ``pattern``: strictly increasing 1-based positions."""

    indices: tuple[int, ...]
    pattern: PatternSpec

    def __post_init__(self):
        idx = tuple(int(i) for i in self.indices)
        object.__setattr__(self, "indices", idx)
        if len(idx) != self.pattern.k:
            raise UsageError(f"witness {idx} has wrong length for pattern {self.pattern}")
        if any(a >= b for a, b in zip(idx, idx[1:])):
            raise UsageError(f"witness indices {idx} are not strictly increasing")

    def violations(self, seq: Sequence) -> list[str]:
        """Human-readable list of failed conditions against full access; empty when valid."""
        out = []
        if self.indices[0] < 1 or self.indices[-1] > seq.n:
            return [f"indices {self.indices} outside [1, {seq.n}]"]
        names = "ijklmn"
        perm = self.pattern.perm
        for a in range(self.pattern.k):
            for b in range(self.pattern.k):
                if perm[a] < perm[b]:
                    ia, ib = self.indices[a], self.indices[b]
                    if not seq[ia] < seq[ib]:
                        out.append(f"f({names[a]}) < f({names[b]}) violated: "
                                   f"f({ia})={format_value(seq[ia])}, f({ib})={format_value(seq[ib])}")
        return out

    def is_valid(self, seq: Sequence) -> bool:
        return not self.violations(seq)

    def to_dict(self) -> dict:
        return {"indices": list(self.indices), "pattern": self.pattern.name}


@dataclass(frozen=True)
class Interval:
    """Inclusive integer interval ``[lo, hi]`` with ``lo <= hi``."""

    lo: int
    hi: int

    def __post_init__(self):
        if self.lo > self.hi:
            raise UsageError(f"empty interval [{self.lo}, {self.hi}]")

    def __len__(self) -> int:
        return self.hi - self.lo + 1

    def __contains__(self, i: int) -> bool:
        return self.lo <= i <= self.hi

    def __iter__(self):
        return iter(range(self.lo, self.hi + 1))


def clamp_interval(lo: int, hi: int, n: int) -> Optional[Interval]:
    """``[max(lo, 1), min(hi, n)]``, or ``None`` if nothing of it lies in ``[1, n]``."""
    a, b = max(int(lo), 1), min(int(hi), int(n))
    if a > b:
        return None
    return Interval(a, b)


class QueryOracle:
    """Counted point-query access to a hidden sequence.

    Every probe increments ``query_count`` by one, repeated positions
    included. With a ``budget``, a probe that would push the count past it
    raises :class:`QueryBudgetExceeded` and returns nothing.
    """

    def __init__(self, target: Sequence, budget: Optional[int] = None, rng_seed: int = 0,
                 record: bool = False):
        self._target = target
        self._values = target.values
        self.query_count = 0
        self.budget = budget
        self.rng_seed = int(rng_seed)
        self.transcript: Optional[list[int]] = [] if record else None

    @property
    def n(self) -> int:
        return self._target.n

    def _charge(self, k: int) -> None:
        if self.budget is not None and self.query_count + k > self.budget:
            raise QueryBudgetExceeded(f"budget of {self.budget} queries exhausted")
        self.query_count += k

    def query(self, i: int) -> float:
        i = int(i)
        if not 1 <= i <= self.n:
            raise UsageError(f"query index {i} outside [1, {self.n}]")
        self._charge(1)
        if self.transcript is not None:
            self.transcript.append(i)
        return float(self._values[i - 1])

    def query_many(self, positions: np.ndarray) -> np.ndarray:
        """Probe every entry of ``positions`` (1-based); costs ``len(positions)`` queries."""
        pos = np.asarray(positions, dtype=np.int64)
        if pos.size == 0:
            return np.empty(0, dtype=np.float64)
        if pos.min() < 1 or pos.max() > self.n:
            raise UsageError(f"query indices outside [1, {self.n}]")
        self._charge(int(pos.size))
        if self.transcript is not None:
            self.transcript.extend(pos.tolist())
        return self._values[pos - 1]

    def _probe(self, pos: np.ndarray) -> np.ndarray:
        """Unchecked batch probe for positions already known to lie in ``[1, n]``."""
        self._charge(int(pos.size))
        if self.transcript is not None:
            self.transcript.extend(pos.tolist())
        return self._values[pos - 1]

    def reveal(self) -> Sequence:
        """Full access for post-hoc witness auditing; never used by testers."""
        return self._target


class MemoizingOracle(QueryOracle):
    """Experimental variant: only the first probe of each position is charged."""

    def __init__(self, target: Sequence, budget: Optional[int] = None, rng_seed: int = 0,
                 record: bool = False):
        super().__init__(target, budget, rng_seed, record)
        self._seen = np.zeros(target.n + 1, dtype=bool)

    def query(self, i: int) -> float:
        i = int(i)
        if not 1 <= i <= self.n:
            raise UsageError(f"query index {i} outside [1, {self.n}]")
        if not self._seen[i]:
            self._charge(1)
            self._seen[i] = True
        if self.transcript is not None:
            self.transcript.append(i)
        return float(self._values[i - 1])

    def query_many(self, positions: np.ndarray) -> np.ndarray:
        pos = np.asarray(positions, dtype=np.int64)
        if pos.size == 0:
            return np.empty(0, dtype=np.float64)
        if pos.min() < 1 or pos.max() > self.n:
            raise UsageError(f"query indices outside [1, {self.n}]")
        fresh = np.unique(pos[~self._seen[pos]])
        self._charge(int(fresh.size))
        self._seen[fresh] = True
        if self.transcript is not None:
            self.transcript.extend(pos.tolist())
        return self._values[pos - 1]

    def _probe(self, pos: np.ndarray) -> np.ndarray:
        return self.query_many(pos)


@dataclass
class TestReport:
    """Outcome of one tester run. ``verdict`` is ``"accept"`` or ``"reject"``."""

    __test__ = False  # not a pytest class

    verdict: str
    witness: Optional[Witness]
    queries: int
    epsilon: float
    n: int
    seed: int
    elapsed: float
    algo: str = "full"
    phase_queries: dict = field(default_factory=dict)
    budget_exhausted: bool = False

    def __post_init__(self):
        if self.verdict not in ("accept", "reject"):
            raise UsageError(f"bad verdict {self.verdict!r}")
        if self.verdict == "reject" and self.witness is None:
            raise UsageError("a rejection must carry a witness")

    @property
    def rejected(self) -> bool:
        return self.verdict == "reject"

    def to_dict(self) -> dict:
        return {
            "verdict": self.verdict,
            "witness": None if self.witness is None else self.witness.to_dict(),
            "queries": self.queries,
            "phase_queries": dict(self.phase_queries),
            "epsilon": self.epsilon,
            "n": self.n,
            "seed": self.seed,
            "algo": self.algo,
            "elapsed": self.elapsed,
            "budget_exhausted": self.budget_exhausted,
        }


# -- text format -------------------------------------------------------------

def format_value(v: float) -> str:
    v = float(v)
    if v.is_integer() and abs(v) < 2 ** 63:
        return str(int(v))
    return format(v, ".17g")


def format_sequence(seq: Sequence) -> str:
    return "\n".join(format_value(v) for v in seq.values) + "\n"


def parse_sequence(text: str) -> Sequence:
    """One value per line, or a single comma-separated line. Blank lines and ``#`` comments skipped."""
    lines = [ln.split("#", 1)[0].strip() for ln in text.splitlines()]
    lines = [ln for ln in lines if ln]
    if len(lines) == 1 and "," in lines[0]:
        tokens = [t.strip() for t in lines[0].split(",") if t.strip()]
    else:
        tokens = lines
    if not tokens:
        raise UsageError("empty sequence file")
    vals = []
    for lineno, tok in enumerate(tokens, 1):
        try:
            v = float(tok)
        except ValueError:
            raise UsageError(f"entry {lineno}: cannot parse {tok!r} as a number") from None
        if not math.isfinite(v):
            raise UsageError(f"entry {lineno}: {tok!r} is not finite")
        vals.append(v)
    return Sequence(vals)


def read_sequence(path: str) -> Sequence:
    with open(path, encoding="utf-8") as fh:
        return parse_sequence(fh.read())


def write_sequence(seq: Sequence, path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(format_sequence(seq))
