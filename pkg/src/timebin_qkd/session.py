"""Paired Alice/Bob runs over an ideal quantum channel.

Both parties observe the same sampled frame.  For AAB and AF, Alice's
assignment message travels through the byte format below before Bob sees
it; Bob always derives his key from his own occupancy.

Wire format (little-endian)::

    offset  size  field
    0       4     magic b"QKDB"
    4       1     format version (1)
    5       1     scheme tag (2 = AAB, 3 = AF)
    6       8     frame index, u64
    14      2     n, u16
    16      2     group count, u16
    18      2n    group index of each time unit, u16
    18+2n   4     CRC-32 of all preceding bytes
"""

from __future__ import annotations

import json
import logging
import math
import struct
import zlib
from dataclasses import dataclass, field
from typing import Optional

from .arrival import ModelParams, RngStream, check_frame_length, sample_frame
from .errors import ConfigurationError, KeyAgreementError, SerializationError
from .rates import TimingParams
from .schemes import (
    AssignmentMessage,
    BinGeometry,
    KeyMaterial,
    Scheme,
    adaptive_binning_encode,
    decode_with_assignment,
    encode,
    simple_binning_encode,
)

__all__ = [
    "MAGIC",
    "FORMAT_VERSION",
    "SessionConfig",
    "SessionReport",
    "serialize_message",
    "deserialize_message",
    "run_session",
]

log = logging.getLogger(__name__)

MAGIC = b"QKDB"
FORMAT_VERSION = 1
_HEADER = struct.Struct("<4sBBQHH")
_CRC = struct.Struct("<I")
_U16_MAX = 0xFFFF
_U64_MAX = (1 << 64) - 1

SCHEME_TAGS = {Scheme.SB: 0, Scheme.AB: 1, Scheme.AAB: 2, Scheme.AF: 3}
_TAG_SCHEMES = {v: k for k, v in SCHEME_TAGS.items()}

FRAME_STREAM = 0
ALICE_STREAM = 1


def serialize_message(message: AssignmentMessage) -> bytes:
    if not message.scheme.needs_public_channel:
        raise SerializationError(f"scheme {message.scheme.value} has no assignment message")
    if not 0 <= message.frame_index <= _U64_MAX:
        raise SerializationError(f"frame index {message.frame_index} does not fit in u64")
    for name, value in (("n", message.n), ("group count", message.group_count)):
        if not 0 <= value <= _U16_MAX:
            raise SerializationError(f"{name} {value} does not fit in u16")
    if any(not 0 <= g <= _U16_MAX for g in message.group_of_unit):
        raise SerializationError("group index does not fit in u16")
    body = _HEADER.pack(
        MAGIC,
        FORMAT_VERSION,
        SCHEME_TAGS[message.scheme],
        message.frame_index,
        message.n,
        message.group_count,
    ) + struct.pack(f"<{message.n}H", *message.group_of_unit)
    return body + _CRC.pack(zlib.crc32(body))


def deserialize_message(data: bytes) -> AssignmentMessage:
    data = bytes(data)
    if len(data) < _HEADER.size + _CRC.size:
        raise SerializationError(f"message too short ({len(data)} bytes)")
    magic, version, tag, frame_index, n, group_count = _HEADER.unpack_from(data)
    if magic != MAGIC:
        raise SerializationError(f"bad magic {magic!r}")
    if version != FORMAT_VERSION:
        raise SerializationError(f"unsupported format version {version}")
    expected = _HEADER.size + 2 * n + _CRC.size
    if len(data) != expected:
        raise SerializationError(f"length field says {expected} bytes, got {len(data)}")
    (crc,) = _CRC.unpack_from(data, expected - _CRC.size)
    if crc != zlib.crc32(data[:expected - _CRC.size]):
        raise SerializationError("CRC mismatch")
    scheme = _TAG_SCHEMES.get(tag)
    if scheme is None or not scheme.needs_public_channel:
        raise SerializationError(f"unknown scheme tag {tag}")
    groups = struct.unpack_from(f"<{n}H", data, _HEADER.size)
    return AssignmentMessage(scheme, frame_index, group_count, groups)


@dataclass(frozen=True)
class SessionConfig:
    scheme: Scheme
    n: int
    p: float
    frame_count: int
    master_seed: int = 0
    k: Optional[int] = None
    timing: TimingParams = field(default_factory=TimingParams)

    def __post_init__(self):
        object.__setattr__(self, "scheme", Scheme.parse(self.scheme))
        check_frame_length(self.n)
        ModelParams(self.p)
        if self.frame_count < 1:
            raise ConfigurationError(f"frame_count must be >= 1, got {self.frame_count}")
        if self.scheme is Scheme.SB:
            if self.k is None:
                raise ConfigurationError("simple binning needs a bin size k")
            BinGeometry(self.n, self.k)

    @classmethod
    def from_dict(cls, data: dict) -> "SessionConfig":
        """Build from a flat mapping; ``T`` and ``D`` sit beside the other keys."""
        known = {"scheme", "n", "k", "p", "frame_count", "master_seed", "T", "D"}
        unknown = set(data) - known
        if unknown:
            raise ConfigurationError(f"unknown config field(s): {', '.join(sorted(unknown))}")
        for name in ("scheme", "n", "p", "frame_count"):
            if name not in data:
                raise ConfigurationError(f"missing config field: {name}")
        timing = TimingParams(T=_float_field(data, "T", 1.0), D=_float_field(data, "D", 0.0))
        scheme = Scheme.parse(data["scheme"])
        if not scheme.needs_public_channel and timing.D > 0:
            log.warning("D=%g ignored: %s uses no public channel", timing.D, scheme.value)
            timing = TimingParams(T=timing.T, D=0.0)
        return cls(
            scheme=scheme,
            n=_int_field(data, "n"),
            p=_float_field(data, "p"),
            frame_count=_int_field(data, "frame_count"),
            master_seed=_int_field(data, "master_seed", 0),
            k=_int_field(data, "k", None),
            timing=timing,
        )


def _int_field(data, name, default=...):
    value = data.get(name, default)
    if value is ...:
        raise ConfigurationError(f"missing config field: {name}")
    if value is None:
        return None
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigurationError(f"config field {name} must be an integer, got {value!r}")
    return value


def _float_field(data, name, default=...):
    value = data.get(name, default)
    if value is ...:
        raise ConfigurationError(f"missing config field: {name}")
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigurationError(f"config field {name} must be a number, got {value!r}")
    return float(value)


@dataclass
class SessionReport:
    alice_key: list[KeyMaterial]
    bob_key: list[KeyMaterial]
    total_bits: float
    frames_used: int
    frames_discarded: int
    windows: int
    elapsed_model_time: float
    effective_rate_observed: float
    standard_error: float
    message_bytes: int

    @property
    def keys_agree(self) -> bool:
        return self.alice_key == self.bob_key

    def to_dict(self) -> dict:
        return {
            "keys_agree": self.keys_agree,
            "total_bits": self.total_bits,
            "frames_used": self.frames_used,
            "frames_discarded": self.frames_discarded,
            "windows": self.windows,
            "elapsed_model_time": self.elapsed_model_time,
            "effective_rate_observed": self.effective_rate_observed,
            "standard_error": self.standard_error,
            "message_bytes": self.message_bytes,
            "alice_key": [k.to_list() for k in self.alice_key],
            "bob_key": [k.to_list() for k in self.bob_key],
        }

    def to_json(self, **kwargs) -> str:
        return json.dumps(self.to_dict(), **kwargs)


def run_session(config: SessionConfig) -> SessionReport:
    """Run ``config.frame_count`` frames and cross-check both keys.

    Raises :class:`KeyAgreementError` on the first frame where Bob's key
    differs from Alice's.
    """
    scheme, n = config.scheme, config.n
    params = ModelParams(config.p)
    frame_rng = RngStream(config.master_seed, FRAME_STREAM)
    alice_rng = RngStream(config.master_seed, ALICE_STREAM)
    alice_keys: list[KeyMaterial] = []
    bob_keys: list[KeyMaterial] = []
    per_frame_bits: list[float] = []
    message_bytes = 0

    for index in range(config.frame_count):
        frame = sample_frame(params, n, frame_rng)
        alice, message = encode(scheme, frame, alice_rng, config.k, frame_index=index)
        bob_frame = frame  # ideal channel
        if message is not None:
            wire = serialize_message(message)
            message_bytes += len(wire)
            bob = decode_with_assignment(bob_frame, deserialize_message(wire))
        elif scheme is Scheme.SB:
            bob = simple_binning_encode(bob_frame, config.k)
        elif scheme is Scheme.AB:
            bob = adaptive_binning_encode(bob_frame)
        else:
            bob = None
        if alice != bob:
            raise KeyAgreementError(f"frame {index}: Alice {alice} != Bob {bob}")
        if alice is None:
            per_frame_bits.append(0.0)
            continue
        alice_keys.append(alice)
        bob_keys.append(bob)
        per_frame_bits.append(alice.bits)

    timing = config.timing
    windows = config.frame_count
    if scheme.needs_public_channel:
        elapsed = windows * (n * timing.T + timing.D)
    else:
        elapsed = config.frame_count * n * timing.T
    units = elapsed / timing.T
    total = math.fsum(per_frame_bits)
    observed = total / units
    frames = len(per_frame_bits)
    if frames > 1:
        mean = total / frames
        var = math.fsum((b - mean) ** 2 for b in per_frame_bits) / (frames - 1)
        stderr = math.sqrt(var / frames) * frames / units
    else:
        stderr = math.nan
    return SessionReport(
        alice_key=alice_keys,
        bob_key=bob_keys,
        total_bits=total,
        frames_used=len(alice_keys),
        frames_discarded=config.frame_count - len(alice_keys),
        windows=windows,
        elapsed_model_time=elapsed,
        effective_rate_observed=observed,
        standard_error=stderr,
        message_bytes=message_bytes,
    )
