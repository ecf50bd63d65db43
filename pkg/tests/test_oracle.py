import math

import pytest

from timebin_qkd import BudgetError, DomainError, Scheme
from timebin_qkd.oracle import (
    compositions,
    enumerate_rate,
    is_balanced,
    monte_carlo_rate,
    partition_bound_check,
)
from timebin_qkd.rates import raw_rate


def test_enumerate_sb_hand_case():
    r = enumerate_rate("SB", 0.5, 2, k=1)
    assert r.expected_bits_per_unit == 0.25
    assert r.frames_accepted_probability == 0.5


@pytest.mark.parametrize("scheme", list(Scheme))
def test_enumerate_zero_probability(scheme):
    r = enumerate_rate(scheme, 0.0, 8, k=1)
    assert r.expected_bits_per_unit == 0.0
    assert r.frames_accepted_probability == 0.0


def test_enumerate_ab_equals_formula():
    r = enumerate_rate("AB", 0.2, 8)
    assert abs(r.expected_bits_per_unit - raw_rate("AB", 0.2, 8)) <= 1e-10
    assert 0.0 <= r.frames_accepted_probability <= 1.0


def test_enumerate_budget():
    with pytest.raises(BudgetError):
        enumerate_rate("AF", 0.2, 32)


def test_monte_carlo_zero_probability():
    for scheme in Scheme:
        est = monte_carlo_rate(scheme, 0.0, 8, 1000, seed=1, k=1)
        assert est.mean == 0.0


def test_monte_carlo_reproducible_and_chunk_independent():
    a = monte_carlo_rate("AAB", 0.3, 8, 5000, seed=42)
    b = monte_carlo_rate("AAB", 0.3, 8, 5000, seed=42, chunk_size=777)
    assert a == b
    assert monte_carlo_rate("AAB", 0.3, 8, 5000, seed=43) != a


def test_monte_carlo_standard_error_scaling():
    ref = raw_rate("SB", 0.5, 8, 1)
    errs = []
    for trials in (10**4, 10**5, 10**6):
        est = monte_carlo_rate("SB", 0.5, 8, trials, seed=7, k=1)
        assert abs(est.z_score(ref)) <= 4
        errs.append(est.standard_error)
    for small, large in zip(errs, errs[1:]):
        assert small / large == pytest.approx(math.sqrt(10), rel=0.05)


def test_partition_bound_examples():
    assert partition_bound_check(8, 3, (3, 3, 2))
    assert is_balanced(8, (3, 3, 2))
    assert partition_bound_check(8, 3, (1, 3, 4))
    assert math.log2(12) < 2 * math.log2(3) + 1
    assert partition_bound_check(8, 8, (1,) * 8)
    with pytest.raises(DomainError):
        partition_bound_check(8, 3, (1, 2, 3))


def test_compositions_count():
    for n in range(1, 9):
        for g in range(1, n + 1):
            assert sum(1 for _ in compositions(n, g)) == math.comb(n - 1, g - 1)
