"""Discrete-time photon arrival model.

Time is cut into units short enough that at most one photon lands in any
unit; each unit is occupied independently with probability ``p``.  Frames
are blocks of ``n`` consecutive units, ``n`` a power of two.

Randomness comes from :class:`RngStream`, a thin wrapper around numpy's
counter-based Philox generator.  The stream for ``(master_seed, stream_id)``
is the raw 64-bit output of ``Philox(SeedSequence(master_seed,
spawn_key=(stream_id,)))`` consumed strictly in order, so batched and
one-at-a-time consumers see the same numbers.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable

import numpy as np

from .errors import ConfigurationError, DomainError

__all__ = [
    "ModelParams",
    "Frame",
    "RngStream",
    "is_power_of_two",
    "check_probability",
    "check_frame_length",
    "sample_frame",
    "sample_frames",
    "photon_count",
    "binary_entropy",
    "bin_occupancy_probs",
]

_U64_MASK = (1 << 64) - 1
_BUFFER_SIZE = 4096
_TWO_NEG_53 = 2.0 ** -53


def is_power_of_two(x: int) -> bool:
    return isinstance(x, (int, np.integer)) and x > 0 and (x & (x - 1)) == 0


def check_frame_length(n: int) -> int:
    """Return ``n`` unchanged if it is a power of two >= 2, else raise."""
    if not is_power_of_two(n) or n < 2:
        raise ConfigurationError(f"frame length must be a power of two >= 2, got {n!r}")
    return int(n)


def check_probability(p: float, name: str = "p") -> float:
    p = float(p)
    if not (0.0 <= p <= 1.0):  # also rejects NaN
        raise DomainError(f"{name} must lie in [0, 1], got {p!r}")
    return p


@dataclass(frozen=True)
class ModelParams:
    """Per-unit photon arrival probability."""

    p: float

    def __post_init__(self):
        object.__setattr__(self, "p", check_probability(self.p))


@dataclass(frozen=True)
class Frame:
    """Occupancy flags of one frame; index 0 is the first time unit.

    Examples in the literature usually number units from 1; use
    :meth:`from_units` with ``one_indexed=True`` to build those directly.
    """

    occupancy: tuple[bool, ...]

    def __post_init__(self):
        occ = tuple(bool(x) for x in self.occupancy)
        check_frame_length(len(occ))
        object.__setattr__(self, "occupancy", occ)

    @property
    def n(self) -> int:
        return len(self.occupancy)

    @classmethod
    def from_units(cls, n: int, units: Iterable[int], one_indexed: bool = False) -> "Frame":
        check_frame_length(n)
        offset = 1 if one_indexed else 0
        occ = [False] * n
        for u in units:
            idx = u - offset
            if not 0 <= idx < n:
                raise ConfigurationError(f"time unit {u} outside frame of length {n}")
            occ[idx] = True
        return cls(tuple(occ))

    @classmethod
    def from_bits(cls, n: int, pattern: int) -> "Frame":
        """Frame whose unit ``i`` is occupied iff bit ``i`` of ``pattern`` is set."""
        return cls(tuple(bool((pattern >> i) & 1) for i in range(n)))

    def occupied_units(self) -> list[int]:
        return [i for i, x in enumerate(self.occupancy) if x]

    def empty_units(self) -> list[int]:
        return [i for i, x in enumerate(self.occupancy) if not x]

    def flipped(self, unit: int) -> "Frame":
        occ = list(self.occupancy)
        occ[unit] = not occ[unit]
        return Frame(tuple(occ))


@dataclass
class RngStream:
    """Reproducible random stream keyed by ``(master_seed, stream_id)``.

    Distinct ``stream_id`` values under the same master seed give
    independent streams (numpy ``SeedSequence`` spawn keys).
    """

    master_seed: int
    stream_id: int = 0
    _bitgen: np.random.Philox = field(init=False, repr=False)
    _buf: list = field(init=False, repr=False)
    _pos: int = field(init=False, repr=False)

    def __post_init__(self):
        for name in ("master_seed", "stream_id"):
            value = getattr(self, name)
            if not isinstance(value, (int, np.integer)) or not 0 <= value <= _U64_MASK:
                raise ConfigurationError(f"{name} must be a 64-bit unsigned integer, got {value!r}")
        seq = np.random.SeedSequence(int(self.master_seed), spawn_key=(int(self.stream_id),))
        self._bitgen = np.random.Philox(seq)
        self._buf = []
        self._pos = 0

    def spawn(self, stream_id: int) -> "RngStream":
        """Fresh stream sharing this master seed."""
        return RngStream(self.master_seed, stream_id)

    def next_u64(self) -> int:
        if self._pos >= len(self._buf):
            self._buf = self._bitgen.random_raw(_BUFFER_SIZE).tolist()
            self._pos = 0
        x = self._buf[self._pos]
        self._pos += 1
        return x

    def raw(self, size: int) -> np.ndarray:
        """Next ``size`` raw 64-bit words as a uint64 array."""
        head = self._buf[self._pos:self._pos + size]
        self._pos += len(head)
        rest = size - len(head)
        if rest == 0:
            return np.array(head, dtype=np.uint64)
        tail = self._bitgen.random_raw(rest)
        if not head:
            return tail
        return np.concatenate([np.array(head, dtype=np.uint64), tail])

    def uniform(self, size: int) -> np.ndarray:
        """``size`` doubles in [0, 1), one raw word each (top 53 bits)."""
        return (self.raw(size) >> np.uint64(11)).astype(np.float64) * _TWO_NEG_53

    def randbelow(self, bound: int) -> int:
        """Uniform integer in ``[0, bound)`` by Lemire's multiply-shift with rejection."""
        if bound <= 0:
            raise DomainError(f"bound must be positive, got {bound}")
        m = self.next_u64() * bound
        low = m & _U64_MASK
        if low < bound:
            threshold = ((1 << 64) - bound) % bound
            while low < threshold:
                m = self.next_u64() * bound
                low = m & _U64_MASK
        return m >> 64

    def shuffle(self, items: list) -> None:
        """In-place Fisher-Yates shuffle."""
        for i in range(len(items) - 1, 0, -1):
            j = self.randbelow(i + 1)
            items[i], items[j] = items[j], items[i]


def sample_frame(params: ModelParams, n: int, rng: RngStream) -> Frame:
    """Draw one frame; consumes exactly ``n`` words from ``rng``."""
    check_frame_length(n)
    return Frame(tuple((rng.uniform(n) < params.p).tolist()))


def sample_frames(params: ModelParams, n: int, count: int, rng: RngStream) -> np.ndarray:
    """Draw ``count`` frames as a ``(count, n)`` boolean array.

    Row ``j`` equals what the ``j``-th successive :func:`sample_frame` call
    would have returned from the same stream position.
    """
    check_frame_length(n)
    if count < 0:
        raise ConfigurationError(f"count must be nonnegative, got {count}")
    return (rng.uniform(n * count) < params.p).reshape(count, n)


def photon_count(frame: Frame) -> int:
    return sum(frame.occupancy)


def binary_entropy(p: float) -> float:
    """Binary entropy in bits; ``0`` at ``p`` in {0, 1}."""
    p = check_probability(p)
    if p == 0.0 or p == 1.0:
        return 0.0
    q = 1.0 - p
    return -p * math.log2(p) - q * math.log2(q)


def bin_occupancy_probs(p: float, k: int) -> tuple[float, float]:
    """Probabilities that a bin of ``k`` units is occupied and empty.

    The occupied probability is computed as ``1 - empty`` so the pair sums
    to one exactly.
    """
    p = check_probability(p)
    if not isinstance(k, (int, np.integer)) or k < 1:
        raise DomainError(f"bin size must be a positive integer, got {k!r}")
    empty = (1.0 - p) ** k
    return 1.0 - empty, empty

