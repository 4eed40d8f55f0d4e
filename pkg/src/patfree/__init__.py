"""Adaptive one-sided-error testers for (1,3,2)-pattern freeness, with exact oracles."""

from .core import (
    P12,
    P21,
    P132,
    Interval,
    MemoizingOracle,
    PatternSpec,
    QueryBudgetExceeded,
    QueryOracle,
    Sequence,
    TestReport,
    UsageError,
    Witness,
    clamp_interval,
)

__version__ = "0.1.0"
