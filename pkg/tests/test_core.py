import numpy as np
import pytest
from hypothesis import given, strategies as st

from patfree.core import (
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
    ceil_log2,
    clamp_interval,
    format_sequence,
    parse_sequence,
    read_sequence,
    write_sequence,
)


def test_query_reads_and_counts():
    o = QueryOracle(Sequence([5, 1, 7]))
    assert o.query(2) == 1
    assert o.query_count == 1
    o.query(2)
    assert o.query_count == 2


def test_query_out_of_range():
    o = QueryOracle(Sequence([5, 1, 7]))
    for i in (0, 4, -1):
        with pytest.raises(UsageError):
            o.query(i)
    assert o.query_count == 0


def test_budget_blocks_fourth_probe():
    o = QueryOracle(Sequence([5, 1, 7]), budget=3)
    for i in (1, 2, 3):
        o.query(i)
    with pytest.raises(QueryBudgetExceeded):
        o.query(1)
    assert o.query_count == 3


def test_query_many_counts_repeats_and_respects_budget():
    o = QueryOracle(Sequence(range(10)), budget=5, record=True)
    assert o.query_many(np.array([1, 1, 2])).tolist() == [0, 0, 1]
    assert o.query_count == 3
    with pytest.raises(QueryBudgetExceeded):
        o.query_many(np.array([3, 4, 5]))
    assert o.transcript == [1, 1, 2]


def test_memoizing_oracle_charges_once():
    o = MemoizingOracle(Sequence([3, 1, 2]))
    o.query(1)
    o.query(1)
    o.query_many(np.array([1, 2, 2]))
    assert o.query_count == 2


@pytest.mark.parametrize("lo,hi,n,expected", [
    (-5, 10, 8, Interval(1, 8)),
    (3, 3, 8, Interval(3, 3)),
    (9, 12, 8, None),
    (-4, 0, 8, None),
])
def test_clamp_interval(lo, hi, n, expected):
    assert clamp_interval(lo, hi, n) == expected


@given(st.integers(-50, 50), st.integers(-50, 50), st.integers(1, 40))
def test_clamp_idempotent(lo, hi, n):
    once = clamp_interval(lo, hi, n)
    if once is None:
        assert max(lo, 1) > min(hi, n)
    else:
        assert clamp_interval(once.lo, once.hi, n) == once
        assert 1 <= once.lo <= once.hi <= n


def test_interval_rejects_empty():
    with pytest.raises(UsageError):
        Interval(3, 2)
    assert len(Interval(2, 5)) == 4 and 5 in Interval(2, 5) and 6 not in Interval(2, 5)


@pytest.mark.parametrize("x,expected", [(0, 0), (1, 0), (2, 1), (3, 2), (4, 2), (5, 3), (1024, 10), (1025, 11), (2.5, 2)])
def test_ceil_log2(x, expected):
    assert ceil_log2(x) == expected


def test_sequence_is_immutable_and_one_based():
    s = Sequence([4, 5, 6])
    assert s[1] == 4 and s[3] == 6 and s.n == 3
    with pytest.raises(ValueError):
        s.values[0] = 9
    with pytest.raises(UsageError):
        s[0]


@pytest.mark.parametrize("bad", [[], [1.0, float("nan")], [float("inf")]])
def test_sequence_rejects_bad_values(bad):
    with pytest.raises(UsageError):
        Sequence(bad)


def test_pattern_parse_and_support():
    assert PatternSpec.parse("132") == P132
    assert PatternSpec.parse("(2,1)") == P21
    assert P12.k == 2 and P132.k == 3
    with pytest.raises(UsageError):
        PatternSpec((2, 1, 3))
    with pytest.raises(UsageError):
        PatternSpec((1, 1))


def test_pattern_matching_is_strict():
    assert P132.matches([1, 3, 2])
    assert not P132.matches([1, 3, 3])
    assert not P12.matches([2, 2])
    assert P21.matches([2, 1])


def test_witness_validation(seq132):
    assert Witness((1, 2, 3), P132).is_valid(seq132)
    msgs = Witness((1, 2, 3), P132).violations(Sequence([1, 2, 3]))
    assert msgs == ["f(k) < f(j) violated: f(3)=3, f(2)=2"]
    assert not Witness((1, 2, 4), P132).is_valid(seq132)
    with pytest.raises(UsageError):
        Witness((2, 1, 3), P132)
    with pytest.raises(UsageError):
        Witness((1, 2), P132)


def test_report_requires_witness_on_reject():
    with pytest.raises(UsageError):
        TestReport("reject", None, 0, 0.1, 3, 0, 0.0)
    rep = TestReport("accept", None, 7, 0.1, 3, 0, 0.0)
    assert rep.to_dict()["queries"] == 7 and not rep.rejected


def test_text_formats(tmp_path):
    assert parse_sequence("1, 3, 2\n").tolist() == [1, 3, 2]
    assert parse_sequence("# header\n1\n\n2.5\n").tolist() == [1, 2.5]
    for bad in ("", "1\nfoo\n", "nan\n", "inf\n"):
        with pytest.raises(UsageError):
            parse_sequence(bad)
    s = Sequence([1, 0.1, 1 / 3, -2e-300, 12345678901234567])
    p = tmp_path / "s.txt"
    write_sequence(s, str(p))
    assert read_sequence(str(p)) == s
    assert format_sequence(Sequence([1, 2])) == "1\n2\n"


@given(st.lists(st.floats(allow_nan=False, allow_infinity=False, width=64), min_size=1, max_size=30))
def test_round_trip_exact(vals):
    s = Sequence(vals)
    back = parse_sequence(format_sequence(s))
    assert np.array_equal(back.values, s.values)
