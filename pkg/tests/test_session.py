import struct
import zlib

import pytest
from hypothesis import given, settings, strategies as st

from timebin_qkd import (
    AssignmentMessage,
    ConfigurationError,
    Frame,
    RngStream,
    Scheme,
    SerializationError,
    TimingParams,
    aab_encode,
    af_encode,
    deserialize_message,
    run_session,
    serialize_message,
)
from timebin_qkd.rates import raw_rate
from timebin_qkd.session import SessionConfig


@st.composite
def messages(draw):
    n = draw(st.sampled_from([4, 8, 16, 64]))
    occ = draw(st.lists(st.booleans(), min_size=n, max_size=n).filter(lambda o: 0 < sum(o) < n))
    encoder = draw(st.sampled_from([aab_encode, af_encode]))
    seed = draw(st.integers(min_value=0, max_value=2**64 - 1))
    index = draw(st.integers(min_value=0, max_value=2**64 - 1))
    return encoder(Frame(tuple(occ)), RngStream(seed), frame_index=index)[1]


@settings(max_examples=10_000, deadline=None)
@given(messages())
def test_wire_round_trip(msg):
    assert deserialize_message(serialize_message(msg)) == msg


def test_wire_layout():
    msg = AssignmentMessage(Scheme.AF, 5, 2, (0, 1, 0, 1, 0, 1, 0, 1))
    data = serialize_message(msg)
    assert len(data) == 18 + 2 * 8 + 4
    magic, version, tag, index, n, groups = struct.unpack_from("<4sBBQHH", data)
    assert (magic, version, tag, index, n, groups) == (b"QKDB", 1, 3, 5, 8, 2)
    assert struct.unpack_from("<8H", data, 18) == msg.group_of_unit
    assert struct.unpack_from("<I", data, 34)[0] == zlib.crc32(data[:34])


def test_wire_rejects_corruption():
    data = bytearray(serialize_message(AssignmentMessage(Scheme.AAB, 1, 4, (0, 0, 1, 1, 2, 2, 3, 3))))
    bad_len = bytearray(data)
    bad_len[14] ^= 0x01
    with pytest.raises(SerializationError):
        deserialize_message(bytes(bad_len))
    bad_body = bytearray(data)
    bad_body[20] ^= 0x01
    with pytest.raises(SerializationError):
        deserialize_message(bytes(bad_body))
    with pytest.raises(SerializationError):
        deserialize_message(b"XXXX" + bytes(data[4:]))
    with pytest.raises(SerializationError):
        deserialize_message(bytes(data[:10]))


def test_wire_rejects_wide_group_index():
    with pytest.raises(SerializationError):
        serialize_message(AssignmentMessage(Scheme.AF, 0, 2, (0, 70000, 0, 1)))
    with pytest.raises(SerializationError):
        serialize_message(AssignmentMessage(Scheme.AF, 2**64, 2, (0, 1, 0, 1)))


def _config(**kw):
    base = dict(scheme="SB", n=8, k=1, p=0.2, frame_count=10_000, master_seed=11)
    base.update(kw)
    return SessionConfig(**base)


def test_session_sb_matches_rate():
    report = run_session(_config())
    assert report.keys_agree
    ref = raw_rate("SB", 0.2, 8, 1)
    assert abs(report.effective_rate_observed - ref) <= 4 * report.standard_error
    assert report.frames_used + report.frames_discarded == 10_000
    assert report.message_bytes == 0


def test_session_af_matches_rate():
    report = run_session(_config(scheme="AF", k=None))
    assert report.keys_agree
    ref = raw_rate("AF", 0.2, 8)
    assert abs(report.effective_rate_observed - ref) <= 4 * report.standard_error
    assert report.message_bytes == report.frames_used * (18 + 16 + 4)


def test_session_single_empty_frame():
    report = run_session(_config(p=0.0, frame_count=1))
    assert report.total_bits == 0.0
    assert (report.frames_used, report.frames_discarded) == (0, 1)


def test_window_accounting():
    timing = TimingParams(T=2.0, D=5.0)
    for scheme in ("AAB", "AF"):
        report = run_session(_config(scheme=scheme, k=None, frame_count=50, timing=timing))
        assert report.windows == 50
        assert report.elapsed_model_time == 50 * (8 * 2.0 + 5.0)
    for scheme in ("SB", "AB"):
        cfg = _config(scheme=scheme, frame_count=50, timing=TimingParams(T=2.0, D=0.0))
        assert run_session(cfg).elapsed_model_time == 50 * 8 * 2.0


def test_config_from_dict_errors():
    with pytest.raises(ConfigurationError, match="frame_count"):
        SessionConfig.from_dict({"scheme": "AF", "n": 8, "p": 0.2})
    with pytest.raises(ConfigurationError, match="power of two"):
        SessionConfig.from_dict({"scheme": "AF", "n": 10, "p": 0.2, "frame_count": 3})
    with pytest.raises(ConfigurationError, match="bogus"):
        SessionConfig.from_dict({"scheme": "AF", "n": 8, "p": 0.2, "frame_count": 3, "bogus": 1})


def test_config_drops_d_for_sb(caplog):
    cfg = SessionConfig.from_dict({"scheme": "SB", "n": 8, "k": 1, "p": 0.2, "frame_count": 3, "D": 1e-9})
    assert cfg.timing.D == 0.0
    assert "ignored" in caplog.text


def test_report_export():
    report = run_session(_config(scheme="AF", k=None, frame_count=20))
    doc = report.to_dict()
    assert doc["keys_agree"] is True
    assert all(len(sym) == 2 for key in doc["alice_key"] for sym in key)
