"""Shared brute-force oracles and hypothesis strategies."""

import itertools

import pytest
from hypothesis import strategies as st

from patfree.core import P12, P21, P132, Sequence


def brute_first(values, perm):
    """Lexicographically first index tuple (1-based) realizing ``perm``, by plain enumeration."""
    k = len(perm)
    for idx in itertools.combinations(range(len(values)), k):
        vals = [values[i] for i in idx]
        if all((vals[a] < vals[b]) == (perm[a] < perm[b])
               for a in range(k) for b in range(k) if a != b):
            return tuple(i + 1 for i in idx)
    return None


def brute_distance(values, perm):
    """Minimum deletions leaving a pattern-free subsequence, by subset enumeration."""
    n = len(values)
    for d in range(n + 1):
        for drop in itertools.combinations(range(n), d):
            keep = [values[i] for i in range(n) if i not in drop]
            if brute_first(keep, perm) is None:
                return d
    return n


PATTERNS = [P12, P21, P132]


@st.composite
def small_sequences(draw, max_n=12, ties=True):
    n = draw(st.integers(1, max_n))
    if ties and draw(st.booleans()):
        vals = draw(st.lists(st.integers(0, max(1, n // 2)), min_size=n, max_size=n))
    else:
        vals = draw(st.permutations(range(1, n + 1)))
    return Sequence(vals)


@pytest.fixture
def seq132():
    return Sequence([1, 3, 2])


# -- acceptance reporting ---------------------------------------------------------------

ACCEPTANCE_RESULTS = {}
ACCEPTANCE_COUNT = 11
_acceptance_collected = []


def pytest_collection_modifyitems(session, config, items):
    _acceptance_collected.extend(it for it in items if "test_acceptance" in it.nodeid)


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not _acceptance_collected:
        return
    terminalreporter.section("acceptance criteria")
    for k in range(1, ACCEPTANCE_COUNT + 1):
        ok, detail = ACCEPTANCE_RESULTS.get(k, (False, "not run or errored"))
        terminalreporter.write_line(f"criterion {k:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
