"""Independent checks of the closed-form rates.

Three routes that share no arithmetic with :mod:`timebin_qkd.rates`:

* exhaustive enumeration of all ``2**n`` occupancy patterns, weighting each
  pattern's bit yield by its probability;
* Monte Carlo runs of the real (randomized) encoders;
* brute-force enumeration of integer compositions for the balanced
  partition bound behind adaptive framing.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterator, Optional, Sequence

import numpy as np

from .arrival import Frame, ModelParams, RngStream, check_frame_length, check_probability, sample_frames
from .errors import BudgetError, ConfigurationError, DomainError
from .schemes import (
    Scheme,
    aab_encode,
    adaptive_binning_encode,
    af_encode,
    simple_binning_encode,
    subframe_sizes,
)

__all__ = [
    "ENUMERATION_LIMIT",
    "EnumeratedRate",
    "MonteCarloEstimate",
    "frame_bits",
    "enumerate_rate",
    "monte_carlo_rate",
    "compositions",
    "balanced_partition_bits",
    "partition_bound_check",
    "is_balanced",
]

ENUMERATION_LIMIT = 20
FRAME_STREAM = 0
ENCODER_STREAM = 1


@dataclass(frozen=True)
class EnumeratedRate:
    scheme: Scheme
    n: int
    k: Optional[int]
    p: float
    expected_bits_per_unit: float
    frames_accepted_probability: float


@dataclass(frozen=True)
class MonteCarloEstimate:
    mean: float
    standard_error: float
    trials: int

    def z_score(self, reference: float) -> float:
        diff = self.mean - reference
        if self.standard_error == 0.0 or math.isnan(self.standard_error):
            return 0.0 if diff == 0.0 else math.copysign(math.inf, diff)
        return diff / self.standard_error


def frame_bits(scheme: Scheme, frame: Frame, k: Optional[int] = None) -> float:
    """Bits a frame yields, with no randomness involved.

    SB and AB run their (deterministic) encoders.  For AAB and AF the
    randomized assignment only decides *which* key is produced; the bit
    count follows from the photon count, so it is computed here by direct
    search for the bin size and from the balanced subframe split.
    """
    n = frame.n
    if scheme is Scheme.SB:
        key = simple_binning_encode(frame, k)
        return 0.0 if key is None else key.bits
    if scheme is Scheme.AB:
        key = adaptive_binning_encode(frame)
        return 0.0 if key is None else key.bits
    ell = sum(frame.occupancy)
    if ell == 0 or ell == n:
        return 0.0
    if scheme is Scheme.AAB:
        size = 1
        if 2 * ell <= n:
            while size < ell:
                size *= 2
        else:
            while 2 * size <= n - ell:
                size *= 2
        return math.log2(n // size)
    return subframe_sizes(n, ell if 2 * ell <= n else n - ell).bits


@lru_cache(maxsize=None)
def _tabulate(scheme: Scheme, n: int, k: Optional[int]) -> tuple[tuple[float, ...], tuple[int, ...]]:
    """Total bits and accepted-pattern counts, grouped by photon count."""
    bits = [[] for _ in range(n + 1)]
    accepted = [0] * (n + 1)
    for pattern in range(1 << n):
        frame = Frame.from_bits(n, pattern)
        b = frame_bits(scheme, frame, k)
        ell = pattern.bit_count()
        if b > 0:
            bits[ell].append(b)
            accepted[ell] += 1
    return tuple(math.fsum(b) for b in bits), tuple(accepted)


def enumerate_rate(scheme, p: float, n: int, k: Optional[int] = None) -> EnumeratedRate:
    scheme = Scheme.parse(scheme)
    p = check_probability(p)
    if n > ENUMERATION_LIMIT:
        raise BudgetError(f"exhaustive enumeration is capped at n={ENUMERATION_LIMIT}, got {n}")
    check_frame_length(n)
    if scheme is Scheme.SB:
        if k is None:
            raise ConfigurationError("simple binning needs a bin size k")
    else:
        k = None
    bits_by_ell, accepted_by_ell = _tabulate(scheme, n, k)
    q = 1.0 - p
    weights = [p ** ell * q ** (n - ell) for ell in range(n + 1)]
    expected = math.fsum(w * b for w, b in zip(weights, bits_by_ell)) / n
    accepted = math.fsum(w * c for w, c in zip(weights, accepted_by_ell))
    return EnumeratedRate(
        scheme=scheme,
        n=n,
        k=k,
        p=p,
        expected_bits_per_unit=expected,
        frames_accepted_probability=min(1.0, accepted),
    )


def monte_carlo_rate(
    scheme,
    p: float,
    n: int,
    trials: int,
    seed: int,
    k: Optional[int] = None,
    chunk_size: int = 1 << 16,
) -> MonteCarloEstimate:
    """Estimate the raw rate by sampling frames and running the encoders.

    Frames come from stream 0 of ``seed`` and encoder randomness from
    stream 1, so the estimate is reproducible and independent of
    ``chunk_size``.
    """
    scheme = Scheme.parse(scheme)
    if trials < 1:
        raise DomainError(f"trials must be >= 1, got {trials}")
    check_frame_length(n)
    params = ModelParams(p)
    frame_rng = RngStream(seed, FRAME_STREAM)
    enc_rng = RngStream(seed, ENCODER_STREAM)
    if scheme is Scheme.SB:
        simple_binning_encode(Frame((False,) * n), k)  # validate geometry up front

    # SB and AB are deterministic, so their results can be reused per pattern.
    memo: dict[tuple, float] = {}
    per_frame = np.empty(trials, dtype=np.float64)
    done = 0
    while done < trials:
        count = min(chunk_size, trials - done)
        rows = sample_frames(params, n, count, frame_rng).tolist()
        for j, row in enumerate(rows):
            key_tuple = tuple(row)
            if scheme is Scheme.SB or scheme is Scheme.AB:
                b = memo.get(key_tuple)
                if b is None:
                    frame = Frame(key_tuple)
                    key = (
                        simple_binning_encode(frame, k)
                        if scheme is Scheme.SB
                        else adaptive_binning_encode(frame)
                    )
                    b = memo[key_tuple] = 0.0 if key is None else key.bits
            else:
                fn = aab_encode if scheme is Scheme.AAB else af_encode
                out = fn(Frame(key_tuple), enc_rng)
                b = 0.0 if out is None else out[0].bits
            per_frame[done + j] = b
        done += count

    per_unit = per_frame / n
    mean = float(per_unit.mean())
    stderr = float(per_unit.std(ddof=1) / math.sqrt(trials)) if trials > 1 else math.nan
    return MonteCarloEstimate(mean=mean, standard_error=stderr, trials=trials)


def compositions(n: int, g: int) -> Iterator[tuple[int, ...]]:
    """All ordered ways to write ``n`` as ``g`` positive parts."""
    if g == 1:
        if n >= 1:
            yield (n,)
        return
    for first in range(1, n - g + 2):
        for rest in compositions(n - first, g - 1):
            yield (first,) + rest


def balanced_partition_bits(n: int, g: int) -> float:
    m, r = divmod(n, g)
    return r * math.log2(m + 1) + (g - r) * math.log2(m)


def is_balanced(n: int, sizes: Sequence[int]) -> bool:
    m = n // len(sizes)
    return all(d in (m, m + 1) for d in sizes)


def partition_bound_check(n: int, g: int, sizes: Sequence[int], rel_tol: float = 1e-12) -> bool:
    """True iff ``sum(log2 d)`` does not exceed the balanced-split value."""
    if len(sizes) != g or any(d < 1 for d in sizes):
        raise DomainError(f"need {g} positive group sizes, got {tuple(sizes)}")
    if sum(sizes) != n:
        raise DomainError(f"group sizes {tuple(sizes)} do not sum to n={n}")
    total = math.fsum(math.log2(d) for d in sizes)
    bound = balanced_partition_bits(n, g)
    return total <= bound + rel_tol * max(1.0, bound)
