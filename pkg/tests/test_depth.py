import math
import random

import numpy as np
import pytest
from hypothesis import given, strategies as st

from oracles import expected_depth_exact, harmonic_exact, random_partition_depth
from sigforest.depth import expected_depth, expected_depth_table, harmonic

# frozen from the exact-fraction oracle
EXPECTED_DEPTH_17 = 4.8791050452815155
EXPECTED_DEPTH_256 = 10.248689925634562
EXPECTED_DEPTH_1024 = 13.018351344556267


def test_harmonic_small_values():
    assert harmonic(0) == 0.0
    assert harmonic(1) == 1.0
    assert harmonic(4) == pytest.approx(float(harmonic_exact(4)), abs=1e-15)


def test_expected_depth_anchors():
    assert expected_depth(0) == 0.0
    assert expected_depth(1) == 0.0
    assert expected_depth(2) == 1.0


@pytest.mark.parametrize("m, value", [(17, EXPECTED_DEPTH_17), (256, EXPECTED_DEPTH_256), (1024, EXPECTED_DEPTH_1024)])
def test_expected_depth_matches_exact_fraction(m, value):
    assert float(expected_depth_exact(m)) == value
    assert expected_depth(m) == pytest.approx(value, abs=1e-12)


def test_one_minus_expected_depth_256_is_negative():
    assert 1 - expected_depth(256) < 0


@given(st.integers(min_value=0, max_value=3000))
def test_table_and_scalar_agree_bitwise(m):
    assert expected_depth_table(3000)[m] == expected_depth(m)


def test_table_prefix_is_stable_as_it_grows():
    small = expected_depth_table(10)
    harmonic(200_000)
    assert np.array_equal(small, expected_depth_table(10))


def test_strictly_increasing():
    table = expected_depth_table(5000)
    assert np.all(np.diff(table[1:]) > 0)


def test_harmonic_increments_within_one_ulp():
    for m in range(1, 10_001):
        h = harmonic(m)
        assert abs((h - harmonic(m - 1)) - 1.0 / m) <= math.ulp(h)


def test_asymptotic_form_at_1e5():
    m = 100_000
    approx = 2 * math.log(m - 1) + 2 * 0.5772156649 - 2
    assert abs(expected_depth(m) - approx) < 0.01


def test_harmonic_1e6_is_plain_summation():
    h = harmonic(1_000_000)
    assert h == pytest.approx(math.fsum(1.0 / j for j in range(1, 1_000_001)), rel=1e-12)


def test_matches_mean_depth_of_random_partitions():
    rng = random.Random(12345)
    trials = 100_000
    simulated = sum(random_partition_depth(8, rng) for _ in range(trials)) / trials
    assert simulated == pytest.approx(expected_depth(8), abs=0.02)


def test_negative_argument_rejected():
    with pytest.raises(ValueError):
        expected_depth(-1)
    with pytest.raises(ValueError):
        harmonic(-1)
