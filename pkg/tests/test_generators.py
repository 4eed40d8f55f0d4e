import itertools
import math
from collections import Counter

import numpy as np
import pytest

from conftest import brute_first
from patfree.core import P12, P21, P132
from patfree.exact_oracle import (
    classify_gaps,
    distance_bounds,
    exact_distance_to_free,
    find_pattern_exhaustive,
    is_free,
)
from patfree.generators import (
    KINDS,
    ParameterError,
    gen_132_avoiding,
    gen_gap_controlled,
    gen_monotone,
    gen_planted_far,
    gen_uniform_random_perm,
    make_instance,
    parse_gen_spec,
)


def test_avoiding_n1():
    assert gen_132_avoiding(1, 0).sequence.tolist() == [1]


def test_avoiding_support_is_catalan_at_n4():
    seen = {tuple(gen_132_avoiding(4, s).sequence.tolist()) for s in range(2000)}
    free = {p for p in itertools.permutations(range(1, 5)) if brute_first(p, P132.perm) is None}
    assert len(free) == 14
    assert seen == free


@pytest.mark.parametrize("n", range(4, 13))
def test_avoiding_outputs_are_free(n):
    for s in range(1000):
        seq = gen_132_avoiding(n, s).sequence
        assert sorted(seq.tolist()) == list(range(1, n + 1))
        assert is_free(seq, P132)
        if n <= 10 and s < 100:
            assert find_pattern_exhaustive(seq, P132) is None


def test_planted_small_counts():
    rec = gen_planted_far(30, 0.3, seed=4)
    assert len(rec.planted_family) == 3
    assert rec.certified_far_lower == pytest.approx(3 / 30)
    assert not rec.planted_family.invalid_members(rec.sequence)
    small = gen_planted_far(18, 0.3, seed=4)
    assert exact_distance_to_free(small.sequence, P132) == len(small.planted_family) == 2


@pytest.mark.parametrize("n,eps", [(64, 0.1), (300, 0.2), (1024, 0.3), (4096, 0.1), (99, 1.0)])
def test_planted_certification_honest(n, eps):
    for seed in range(5):
        rec = gen_planted_far(n, eps, seed)
        plants = math.ceil(eps * n / 3 - 1e-9)
        assert len(rec.planted_family) == plants
        assert rec.certified_far_lower >= eps / 3 - 1e-12
        assert distance_bounds(rec.sequence, P132)[0] >= plants
        assert not rec.planted_family.invalid_members(rec.sequence)
        assert len(rec.planted_family) >= math.ceil(rec.certified_far_lower * n - 1e-9)


def test_planted_zero_eps_is_backbone():
    rec = gen_planted_far(50, 0.0, seed=1)
    assert rec.certified_far_lower == 0.0 and rec.planted_family is None
    assert is_free(rec.sequence, P12) and is_free(rec.sequence, P132)


def test_planted_parameter_errors():
    with pytest.raises(ParameterError):
        gen_planted_far(20, 0.1, 0)
    with pytest.raises(ParameterError):
        gen_planted_far(100, 1.5, 0)
    with pytest.raises(ParameterError):
        gen_gap_controlled(100, 0.1, 3, 0)


def test_planted12_pairs():
    rec = gen_planted_far(4096, 0.2, 3, pattern=P12)
    assert rec.planted_family.pattern == P12
    assert len(rec.planted_family) == math.ceil(0.2 * 4096 / 2)
    assert distance_bounds(rec.sequence, P12)[0] >= len(rec.planted_family)
    assert all(b - a <= 16 for a, b in rec.planted_family)


@pytest.mark.parametrize("c", [1, 2])
def test_gap_controlled_class(c):
    for seed in range(5):
        rec = gen_gap_controlled(4096, 0.1, c, seed)
        assert classify_gaps(rec.planted_family) == {c: len(rec.planted_family)}
        assert rec.dominating_gap == c
        assert not rec.planted_family.invalid_members(rec.sequence)
        if c == 2:
            assert all(k - j >= j - i for i, j, k in rec.planted_family)


def test_uniform_perm_frequencies():
    counts = Counter(tuple(gen_uniform_random_perm(3, s).sequence.tolist()) for s in range(60000))
    assert len(counts) == 6
    sigma = math.sqrt(60000 * (1 / 6) * (5 / 6))
    assert all(abs(c - 10000) <= 5 * sigma for c in counts.values())
    assert gen_uniform_random_perm(1, 0).sequence.tolist() == [1]


def test_uniform_perm_distance_grows():
    med = [np.median([distance_bounds(gen_uniform_random_perm(n, s).sequence, P132)[0] for s in range(5)])
           for n in (50, 200)]
    assert med[1] > med[0]
    rec = gen_uniform_random_perm(40, 1)
    assert rec.certified_far_lower is None
    assert rec.certify() == distance_bounds(rec.sequence, P132)[0] / 40


def test_monotone():
    assert gen_monotone(5, "inc").sequence.tolist() == [1, 2, 3, 4, 5]
    dec = gen_monotone(5, "dec").sequence
    assert find_pattern_exhaustive(dec, P12) is None
    assert find_pattern_exhaustive(gen_monotone(5, "inc").sequence, P132) is None
    assert find_pattern_exhaustive(gen_monotone(5, "inc").sequence, P21) is None
    with pytest.raises(ParameterError):
        gen_monotone(5, "up")


@pytest.mark.parametrize("kind", KINDS)
def test_seed_determinism(kind):
    a = make_instance(kind, 512, 0.1, 11)
    b = make_instance(kind, 512, 0.1, 11)
    assert a.sequence == b.sequence
    assert a.to_dict() == b.to_dict()


def test_parse_gen_spec():
    assert parse_gen_spec("planted:n=4096,eps=0.1") == {"kind": "planted", "n": 4096, "eps": 0.1}
    assert parse_gen_spec("gap2:n=64,seed=3")["seed"] == 3
    for bad in ("nope:n=3", "planted:eps=0.1", "planted:n=x", "planted:n=4,q=1"):
        with pytest.raises(ParameterError):
            parse_gen_spec(bad)
