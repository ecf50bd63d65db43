import math

import numpy as np
import pytest

from timebin_qkd import DomainError, ConfigurationError, TimingParams
from timebin_qkd.arrival import binary_entropy
from timebin_qkd.oracle import enumerate_rate
from timebin_qkd.rates import (
    binomial_pmf,
    effective_rate,
    rate_aab,
    rate_adaptive_binning,
    rate_af,
    rate_curve_point,
    rate_simple_binning,
    utilization,
)

GRID = [round(0.01 * i, 2) for i in range(1, 100)]


def test_sb_examples():
    for p in (0.0, 0.3, 1.0):
        assert rate_simple_binning(p, 8, 8) == 0.0
    # (1,0) and (0,1) each give 1 bit with probability 1/4, over 2 units
    assert rate_simple_binning(0.5, 2, 1) == 0.25
    ref = enumerate_rate("SB", 0.5, 8, 2).expected_bits_per_unit
    assert abs(rate_simple_binning(0.5, 8, 2) - ref) <= 1e-12


def test_sb_rejects_bad_geometry():
    with pytest.raises(ConfigurationError):
        rate_simple_binning(0.3, 8, 3)
    with pytest.raises(ConfigurationError):
        rate_simple_binning(0.3, 12, 4)


def test_ab_examples():
    assert rate_adaptive_binning(0.0, 8) == 0.0
    assert rate_adaptive_binning(1.0, 8) == 0.0
    ref = enumerate_rate("AB", 0.2, 8).expected_bits_per_unit
    assert abs(rate_adaptive_binning(0.2, 8) - ref) <= 1e-12
    with pytest.raises(DomainError):
        rate_adaptive_binning(0.2, 2)


def test_aab_examples():
    assert rate_aab(0.0, 8) == 0.0
    assert rate_aab(0.5, 2) == 0.25
    ref = enumerate_rate("AAB", 0.2, 8).expected_bits_per_unit
    assert abs(rate_aab(0.2, 8) - ref) <= 1e-12


def test_af_examples():
    assert rate_af(0.5, 2) == 0.25
    assert rate_af(0.0, 8) == 0.0
    assert rate_af(1.0, 8) == 0.0
    ref = enumerate_rate("AF", 0.2, 8).expected_bits_per_unit
    assert abs(rate_af(0.2, 8) - ref) <= 1e-12


def test_binomial_pmf_sums_to_one_at_n64():
    for p in (0.01, 0.5, 0.99):
        assert math.fsum(binomial_pmf(64, ell, p) for ell in range(65)) == pytest.approx(1.0, abs=1e-13)


@pytest.mark.parametrize("n", [4, 8, 16, 64])
def test_rates_within_entropy_bound(n):
    for p in GRID:
        h = binary_entropy(p)
        rates = [rate_aab(p, n), rate_af(p, n), rate_adaptive_binning(p, n)]
        rates += [rate_simple_binning(p, n, k) for k in (1, 2, 4) if k <= n]
        assert all(0.0 <= r <= h for r in rates)


@pytest.mark.parametrize("n", [8, 16, 64])
def test_af_dominates(n):
    for p in GRID:
        af = rate_af(p, n)
        assert af >= rate_aab(p, n)
        assert af >= rate_adaptive_binning(p, n)
        assert af >= rate_simple_binning(p, n, 1)


@pytest.mark.parametrize("n", [8, 16, 64])
def test_rates_vanish_at_extremes(n):
    for p in (1e-9, 1 - 1e-9):
        for r in (rate_aab(p, n), rate_af(p, n), rate_adaptive_binning(p, n), rate_simple_binning(p, n, 1)):
            assert r < 1e-6


def _p_single_occupied(n, k, ell, p):
    """P(ell photons, all inside one bin of size k); zero when k < ell."""
    if k < ell:
        return 0.0
    return (n // k) * math.comb(k, ell) * p ** ell * (1 - p) ** (n - ell)


@pytest.mark.parametrize("n", [8, 16, 64])
def test_telescoping_identity(n):
    y = int(math.log2(n))
    for p in np.linspace(0.05, 0.95, 19):
        for ell in range(1, n // 2 + 1):
            x = math.ceil(math.log2(ell))
            lhs = math.fsum(
                (_p_single_occupied(n, 2 ** i, ell, p) - (_p_single_occupied(n, 2 ** (i - 1), ell, p) if i > x else 0.0)) * (y - i)
                for i in range(x, y)
            )
            rhs = math.fsum(_p_single_occupied(n, 2 ** i, ell, p) for i in range(x, y))
            assert lhs == pytest.approx(rhs, rel=1e-12, abs=1e-300)


def test_effective_rate():
    assert effective_rate(0.3, 8, TimingParams(T=1e-11, D=0.0)) == 0.3
    assert effective_rate(0.3, 8, TimingParams(T=1.0, D=8.0)) == 0.15
    assert effective_rate(0.4, 64, TimingParams(T=10e-12, D=640e-12)) == pytest.approx(0.2, rel=1e-15)
    with pytest.raises(ConfigurationError):
        TimingParams(T=0.0)
    with pytest.raises(ConfigurationError):
        TimingParams(T=1.0, D=-1.0)


def test_utilization():
    assert utilization(binary_entropy(0.3), 0.3) == 1.0
    assert utilization(0.0, 0.3) == 0.0
    for p in (0.0, 1.0):
        with pytest.raises(DomainError):
            utilization(0.1, p)


def test_rate_curve_point_drops_d_for_sb_and_ab():
    timing = TimingParams(T=1.0, D=64.0)
    for scheme in ("SB", "AB"):
        pt = rate_curve_point(scheme, 64, 0.1, k=1, timing=timing)
        assert pt.effective_rate == pt.raw_rate
    pt = rate_curve_point("AF", 64, 0.1, timing=timing)
    assert pt.effective_rate == pytest.approx(pt.raw_rate / 2)
    assert pt.k is None


def test_sb_max_utilization_grows_with_n():
    grid = [i / 1000 for i in range(1, 1000)]
    for k in (1, 2, 4):
        maxima = [max(rate_simple_binning(p, n, k) / binary_entropy(p) for p in grid) for n in (8, 16, 64)]
        assert maxima == sorted(maxima) and len(set(maxima)) == 3


def test_sb_larger_bins_win_somewhere():
    wins = [p for p in GRID if rate_simple_binning(p, 8, 2) > rate_simple_binning(p, 8, 1)]
    assert wins
