"""Alice-side encoders and Bob-side decoders for the four binning schemes.

All indices (time units, bins, groups) are zero-based.  Keys are kept as
mixed-radix symbols because adaptive-framing subframes need not have
power-of-two sizes.

=====  ==================================  ======================
tag    scheme                              public message
=====  ==================================  ======================
SB     simple binning, fixed bin size k    no
AB     adaptive binning                    no
AAB    adaptive aggregated binning         unit -> bin map
AF     adaptive framing                    unit -> subframe map
=====  ==================================  ======================
"""

from __future__ import annotations

import enum
import math
from collections import Counter
from dataclasses import dataclass
from typing import Optional

from .arrival import Frame, RngStream, check_frame_length, is_power_of_two, photon_count
from .errors import ConfigurationError, DomainError, ProtocolError

__all__ = [
    "Scheme",
    "BinGeometry",
    "KeyMaterial",
    "AssignmentMessage",
    "SubframePartition",
    "simple_binning_encode",
    "adaptive_binning_encode",
    "aab_encode",
    "af_encode",
    "decode_with_assignment",
    "subframe_sizes",
    "aab_bin_size",
    "encode",
]


class Scheme(str, enum.Enum):
    SB = "SB"
    AB = "AB"
    AAB = "AAB"
    AF = "AF"

    @property
    def needs_public_channel(self) -> bool:
        return self in (Scheme.AAB, Scheme.AF)

    @classmethod
    def parse(cls, value) -> "Scheme":
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).upper())
        except ValueError:
            raise ConfigurationError(
                f"unknown scheme {value!r}; expected one of {[s.value for s in cls]}"
            ) from None


@dataclass(frozen=True)
class BinGeometry:
    """Uniform split of an ``n``-unit frame into ``n // k`` bins of ``k`` units."""

    n: int
    k: int

    def __post_init__(self):
        check_frame_length(self.n)
        if not is_power_of_two(self.k) or self.k > self.n:
            raise ConfigurationError(
                f"bin size must be a power of two dividing n={self.n}, got {self.k!r}"
            )

    @property
    def bin_count(self) -> int:
        return self.n // self.k

    def bin_of(self, unit: int) -> int:
        return unit // self.k

    def occupied_bins(self, frame: Frame) -> list[bool]:
        occ = frame.occupancy
        k = self.k
        return [any(occ[i * k:(i + 1) * k]) for i in range(self.bin_count)]


@dataclass(frozen=True)
class KeyMaterial:
    """Ordered ``(value, radix)`` symbols extracted from one frame."""

    symbols: tuple[tuple[int, int], ...]

    def __post_init__(self):
        symbols = tuple((int(v), int(r)) for v, r in self.symbols)
        for value, radix in symbols:
            if radix < 2 or not 0 <= value < radix:
                raise DomainError(f"invalid symbol (value={value}, radix={radix})")
        object.__setattr__(self, "symbols", symbols)

    @property
    def bits(self) -> float:
        return math.fsum(math.log2(r) for _, r in self.symbols)

    def bit_string(self) -> str:
        """MSB-first label; only defined when every radix is a power of two."""
        out = []
        for value, radix in self.symbols:
            if not is_power_of_two(radix):
                raise DomainError(f"radix {radix} has no fixed-width bit label")
            width = radix.bit_length() - 1
            out.append(format(value, f"0{width}b"))
        return "".join(out)

    def to_list(self) -> list[list[int]]:
        return [[v, r] for v, r in self.symbols]


@dataclass(frozen=True)
class SubframePartition:
    """Balanced split of ``n`` units into ``group_count`` groups.

    ``r`` groups get ``m + 1`` units and the rest get ``m``, where
    ``n == m * group_count + r``.
    """

    n: int
    group_count: int
    m: int
    r: int

    @property
    def sizes(self) -> tuple[int, ...]:
        return (self.m + 1,) * self.r + (self.m,) * (self.group_count - self.r)

    @property
    def bits(self) -> float:
        return math.fsum(math.log2(d) for d in self.sizes)


def subframe_sizes(n: int, g: int) -> SubframePartition:
    if g < 1 or g > n:
        raise DomainError(f"group count must lie in [1, {n}], got {g}")
    m, r = divmod(n, g)
    return SubframePartition(n=n, group_count=g, m=m, r=r)


@dataclass(frozen=True)
class AssignmentMessage:
    """Unit-to-group map Alice publishes for AAB and AF frames.

    Construction only checks shape; :meth:`validate` enforces the scheme's
    partition rule and is run by every decoder.
    """

    scheme: Scheme
    frame_index: int
    group_count: int
    group_of_unit: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "scheme", Scheme.parse(self.scheme))
        object.__setattr__(self, "group_of_unit", tuple(int(g) for g in self.group_of_unit))

    @property
    def n(self) -> int:
        return len(self.group_of_unit)

    def groups(self) -> list[list[int]]:
        """Units of each group in ascending time order."""
        out: list[list[int]] = [[] for _ in range(self.group_count)]
        for unit, g in enumerate(self.group_of_unit):
            out[g].append(unit)
        return out

    def validate(self) -> None:
        if not self.scheme.needs_public_channel:
            raise ProtocolError(f"scheme {self.scheme.value} sends no assignment message")
        n, g = self.n, self.group_count
        if not is_power_of_two(n) or n < 2:
            raise ProtocolError(f"map length {n} is not a valid frame length")
        if not 1 <= g <= n:
            raise ProtocolError(f"group count {g} outside [1, {n}]")
        if any(not 0 <= x < g for x in self.group_of_unit):
            raise ProtocolError("group index out of range")
        sizes = Counter(self.group_of_unit)
        if len(sizes) != g:
            raise ProtocolError("some group has no units")
        if self.scheme is Scheme.AAB:
            k = n // g
            if not is_power_of_two(g) or g < 2 or any(s != k for s in sizes.values()):
                raise ProtocolError(f"AAB bins must all have size {k} with a power-of-two count >= 2")
        else:
            part = subframe_sizes(n, g)
            if part.m < 2 or sorted(sizes.values(), reverse=True) != list(part.sizes):
                raise ProtocolError(f"AF subframe sizes must be {part.sizes}")


def _simple_symbol(frame: Frame, geom: BinGeometry) -> Optional[tuple[int, int]]:
    """Symbol for the single occupied (preferred) or single empty bin, if any."""
    if geom.k == geom.n:
        return None
    flags = geom.occupied_bins(frame)
    occupied = [i for i, f in enumerate(flags) if f]
    if len(occupied) == 1:
        return occupied[0], geom.bin_count
    if len(occupied) == geom.bin_count - 1:
        empty = flags.index(False)
        return empty, geom.bin_count
    return None


def simple_binning_encode(frame: Frame, k: int) -> Optional[KeyMaterial]:
    geom = BinGeometry(frame.n, k)
    symbol = _simple_symbol(frame, geom)
    return None if symbol is None else KeyMaterial((symbol,))


def adaptive_binning_encode(frame: Frame) -> Optional[KeyMaterial]:
    """Simple binning with the smallest bin size meeting the binning conditions.

    Deterministic; a frame whose smallest admissible bin size is the whole
    frame (or which is empty or full) yields nothing.
    """
    n = frame.n
    k = 1
    while k < n:
        symbol = _simple_symbol(frame, BinGeometry(n, k))
        if symbol is not None:
            return KeyMaterial((symbol,))
        k *= 2
    return None


def aab_bin_size(n: int, ell: int) -> int:
    """Bin size AAB uses for a frame holding ``ell`` photons (``0 < ell < n``)."""
    if not 0 < ell < n:
        raise DomainError(f"photon count must lie in (0, {n}), got {ell}")
    if 2 * ell <= n:
        return 1 << (ell - 1).bit_length()
    return 1 << ((n - ell).bit_length() - 1)


def aab_encode(
    frame: Frame, rng: RngStream, frame_index: int = 0
) -> Optional[tuple[KeyMaterial, AssignmentMessage]]:
    n = frame.n
    occupied = frame.occupied_units()
    ell = len(occupied)
    if ell == 0 or ell == n:
        return None
    k = aab_bin_size(n, ell)
    m = n // k
    target = rng.randbelow(m)
    empty = frame.empty_units()
    rng.shuffle(empty)
    group_of = [0] * n
    if 2 * ell <= n:
        chosen = occupied + empty[:k - ell]
        rest = empty[k - ell:]
    else:
        chosen = empty[:k]
        rest = empty[k:] + occupied
        rng.shuffle(rest)
    for u in chosen:
        group_of[u] = target
    others = [g for g in range(m) if g != target]
    for idx, u in enumerate(rest):
        group_of[u] = others[idx // k]
    key = KeyMaterial(((target, m),))
    msg = AssignmentMessage(Scheme.AAB, frame_index, m, tuple(group_of))
    return key, msg


def _af_key(frame: Frame, groups: list[list[int]], marked_value: bool) -> Optional[KeyMaterial]:
    occ = frame.occupancy
    symbols = []
    for units in groups:
        ranks = [i for i, u in enumerate(units) if occ[u] == marked_value]
        if len(ranks) != 1:
            return None
        symbols.append((ranks[0], len(units)))
    return KeyMaterial(tuple(symbols))


def af_encode(
    frame: Frame, rng: RngStream, frame_index: int = 0
) -> Optional[tuple[KeyMaterial, AssignmentMessage]]:
    """Adaptive framing: one subframe per photon (or per empty unit when
    photons are the majority), topped up round-robin with random units."""
    n = frame.n
    ell = photon_count(frame)
    if ell == 0 or ell == n:
        return None
    marked_value = 2 * ell <= n
    marked = frame.occupied_units() if marked_value else frame.empty_units()
    g = len(marked)
    group_of = [0] * n
    for j, u in enumerate(marked):
        group_of[u] = j
    rest = frame.empty_units() if marked_value else frame.occupied_units()
    # Successive random picks without replacement, dealt from subframe 0.
    rng.shuffle(rest)
    for idx, u in enumerate(rest):
        group_of[u] = idx % g
    msg = AssignmentMessage(Scheme.AF, frame_index, g, tuple(group_of))
    key = _af_key(frame, msg.groups(), marked_value)
    assert key is not None
    return key, msg


def decode_with_assignment(frame: Frame, message: AssignmentMessage) -> Optional[KeyMaterial]:
    """Recompute the key from Bob's own occupancy and Alice's published map.

    Raises :class:`ProtocolError` for a malformed map; returns ``None`` when
    Bob's frame is inconsistent with it.
    """
    message.validate()
    if message.n != frame.n:
        raise ProtocolError(f"map covers {message.n} units but frame has {frame.n}")
    n = frame.n
    ell = photon_count(frame)
    if ell == 0 or ell == n:
        return None
    occ = frame.occupancy
    groups = message.groups()
    if message.scheme is Scheme.AAB:
        if n // message.group_count != aab_bin_size(n, ell):
            return None
        if 2 * ell <= n:
            hits = [i for i, units in enumerate(groups) if any(occ[u] for u in units)]
        else:
            hits = [i for i, units in enumerate(groups) if not any(occ[u] for u in units)]
        if len(hits) != 1:
            return None
        return KeyMaterial(((hits[0], message.group_count),))
    marked_value = 2 * ell <= n
    if message.group_count != (ell if marked_value else n - ell):
        return None
    return _af_key(frame, groups, marked_value)


def encode(
    scheme,
    frame: Frame,
    rng: Optional[RngStream] = None,
    k: Optional[int] = None,
    frame_index: int = 0,
):
    """Dispatch to the scheme's encoder.

    Returns ``(key, message)``; ``key`` is ``None`` for a discarded frame and
    ``message`` is ``None`` for schemes without a public channel.
    """
    scheme = Scheme.parse(scheme)
    if scheme is Scheme.SB:
        if k is None:
            raise ConfigurationError("simple binning needs a bin size k")
        return simple_binning_encode(frame, k), None
    if scheme is Scheme.AB:
        return adaptive_binning_encode(frame), None
    if rng is None:
        raise ConfigurationError(f"{scheme.value} needs an RngStream")
    fn = aab_encode if scheme is Scheme.AAB else af_encode
    out = fn(frame, rng, frame_index)
    return (None, None) if out is None else out
