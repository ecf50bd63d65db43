"""Closed-form raw key rates, effective rates and photon utilization.

Rates are in expected raw key bits per time unit.  Sums are accumulated
with :func:`math.fsum`, so results do not depend on summation order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

from .arrival import check_probability, bin_occupancy_probs, binary_entropy, check_frame_length
from .errors import ConfigurationError, DomainError
from .schemes import BinGeometry, Scheme

__all__ = [
    "TimingParams",
    "RateCurvePoint",
    "binomial_pmf",
    "rate_simple_binning",
    "rate_adaptive_binning",
    "rate_aab",
    "rate_af",
    "raw_rate",
    "effective_rate",
    "utilization",
    "rate_curve_point",
    "RATE_FUNCTIONS",
]


@dataclass(frozen=True)
class TimingParams:
    """Length of a time unit and public-channel time per window, in seconds."""

    T: float = 1.0
    D: float = 0.0

    def __post_init__(self):
        if not self.T > 0:
            raise ConfigurationError(f"time unit length T must be positive, got {self.T!r}")
        if not self.D >= 0:
            raise ConfigurationError(f"communication time D must be nonnegative, got {self.D!r}")


def _log2_int(x: int) -> int:
    return x.bit_length() - 1


def binomial_pmf(n: int, ell: int, p: float) -> float:
    """P(exactly ``ell`` photons among ``n`` units).

    The binomial coefficient is an exact integer; converting it to float is
    safe well past n = 1000, so no log-space evaluation is needed.
    """
    return math.comb(n, ell) * p ** ell * (1.0 - p) ** (n - ell)


def rate_simple_binning(p: float, n: int, k: int) -> float:
    p = check_probability(p)
    geom = BinGeometry(n, k)
    if k == n:
        return 0.0
    occ, emp = bin_occupancy_probs(p, k)
    if 2 * k == n:
        return occ * emp / k
    bins = geom.bin_count
    return (occ * emp ** (bins - 1) + occ ** (bins - 1) * emp) * _log2_int(bins) / k


def rate_adaptive_binning(p: float, n: int) -> float:
    p = check_probability(p)
    check_frame_length(n)
    if n < 4:
        raise DomainError(f"adaptive-binning formula needs n >= 4, got {n}")
    log_n = _log2_int(n)
    q = 1.0 - p
    terms = []
    # Single occupied bin at the smallest admissible size; telescoped form.
    for ell in range(1, n // 2 + 1):
        weight = p ** ell * q ** (n - ell)
        for i in range((ell - 1).bit_length(), log_n):
            terms.append(math.comb(1 << i, ell) * weight / (1 << i))
    # Single empty bin, bin size at most n/4.
    for i in range(0, log_n - 1):
        k = 1 << i
        occ, emp = bin_occupancy_probs(p, k)
        terms.append(occ ** (n // k - 1) * emp * (log_n - i) / k)
    return math.fsum(terms)


def _aab_frame_bits(n: int, ell: int) -> int:
    log_n = _log2_int(n)
    if 2 * ell <= n:
        return log_n - (ell - 1).bit_length()
    return log_n - _log2_int(n - ell)


def _af_frame_bits(n: int, ell: int) -> float:
    g = ell if 2 * ell <= n else n - ell
    m, r = divmod(n, g)
    return r * math.log2(m + 1) + (g - r) * math.log2(m)


def _per_photon_count_rate(p: float, n: int, bits: Callable[[int, int], float]) -> float:
    p = check_probability(p)
    check_frame_length(n)
    return math.fsum(binomial_pmf(n, ell, p) * bits(n, ell) for ell in range(1, n)) / n


def rate_aab(p: float, n: int) -> float:
    return _per_photon_count_rate(p, n, _aab_frame_bits)


def rate_af(p: float, n: int) -> float:
    return _per_photon_count_rate(p, n, _af_frame_bits)


RATE_FUNCTIONS: dict[Scheme, Callable] = {
    Scheme.SB: rate_simple_binning,
    Scheme.AB: rate_adaptive_binning,
    Scheme.AAB: rate_aab,
    Scheme.AF: rate_af,
}


def raw_rate(scheme, p: float, n: int, k: Optional[int] = None) -> float:
    scheme = Scheme.parse(scheme)
    if scheme is Scheme.SB:
        if k is None:
            raise ConfigurationError("simple binning needs a bin size k")
        return rate_simple_binning(p, n, k)
    return RATE_FUNCTIONS[scheme](p, n)


def effective_rate(raw_rate: float, n: int, timing: TimingParams) -> float:
    """Scale a raw rate by the sensing fraction ``nT / (nT + D)`` of a window.

    Schemes without a public channel should be given ``D = 0``.
    """
    if raw_rate < 0:
        raise DomainError(f"raw rate must be nonnegative, got {raw_rate}")
    sensing = n * timing.T
    return sensing / (sensing + timing.D) * raw_rate


def utilization(raw_rate: float, p: float) -> float:
    ideal = binary_entropy(p)
    if ideal == 0.0:
        raise DomainError(f"utilization is undefined at p={p}")
    return raw_rate / ideal


@dataclass(frozen=True)
class RateCurvePoint:
    scheme: Scheme
    n: int
    k: Optional[int]
    p: float
    raw_rate: float
    utilization: float
    effective_rate: float


def rate_curve_point(
    scheme, n: int, p: float, k: Optional[int] = None, timing: Optional[TimingParams] = None
) -> RateCurvePoint:
    scheme = Scheme.parse(scheme)
    timing = timing or TimingParams()
    if not scheme.needs_public_channel:
        timing = TimingParams(T=timing.T, D=0.0)
    if scheme is not Scheme.SB:
        k = None
    raw = raw_rate(scheme, p, n, k)
    return RateCurvePoint(
        scheme=scheme,
        n=n,
        k=k,
        p=p,
        raw_rate=raw,
        utilization=utilization(raw, p),
        effective_rate=effective_rate(raw, n, timing),
    )
