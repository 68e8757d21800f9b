import pytest
from hypothesis import given
import hypothesis.strategies as st

from qcmflow.agent import (
    AgentState,
    agent_apply_controller_change,
    agent_handle_request,
    agent_on_middleware_change,
    flow_module_transform,
)
from qcmflow.errors import CodecError, ProtocolError, RecordValidationError, TimeRegressionError
from qcmflow.metadata import ChannelSpec, ComProtocol, EcSpec, QcmRecord
from qcmflow.wire import Direction, QcmMultipart, decode_multipart, encode_multipart, reassemble

from strategies import records


def poll(xid):
    return QcmMultipart(Direction.REQUEST, xid)


def test_reply_echoes_xid_and_carries_record():
    r = QcmRecord(qchannel=3, qcom=1, qcom_spec=b"\x01" * 16)
    s = AgentState(1, r)
    s2, (reply,) = agent_handle_request(s, poll(7))
    assert reply.direction is Direction.REPLY
    assert reply.xid == 7 and reply.records == (r,) and reply.flags == 0
    assert s2.local_record == s.local_record and s2.last_change_time == s.last_change_time


@given(records(), st.integers(1, 0xFFFFFFFF))
def test_reply_reassembles_to_record_through_codec(r, xid):
    _, replies = agent_handle_request(AgentState(1, r), encode_multipart(poll(xid)))
    decoded = [decode_multipart(encode_multipart(m)) for m in replies]
    assert reassemble(decoded) == [r]


def test_malformed_request_raises_and_no_reply():
    raw = bytearray(encode_multipart(poll(3)))
    raw[8:10] = (13).to_bytes(2, "big")
    with pytest.raises(CodecError):
        agent_handle_request(AgentState(1), bytes(raw))


def test_reply_as_request_is_protocol_error():
    with pytest.raises(ProtocolError):
        agent_handle_request(AgentState(1), QcmMultipart(Direction.REPLY, 3))


def test_no_op_change_emits_nothing():
    r = QcmRecord(qchannel=2)
    s = AgentState(1, r, last_change_time=1)
    s2, msg = agent_on_middleware_change(s, r, 4)
    assert msg is None and s2 == s


def test_change_with_async_emits_unsolicited_reply():
    new = QcmRecord(qcom=ComProtocol.SDC)
    s, msg = agent_on_middleware_change(AgentState(1), new, 0)
    assert msg.direction is Direction.REPLY and msg.xid == 0 and msg.records == (new,)
    assert s.local_record == new
    assert decode_multipart(encode_multipart(msg)) == msg


def test_change_with_async_off_is_seen_by_next_poll():
    new = QcmRecord(qchannel=11)
    s, msg = agent_on_middleware_change(AgentState(1, async_enabled=False), new, 2)
    assert msg is None
    assert s.last_change_time == 2
    _, (reply,) = agent_handle_request(s, poll(5))
    assert reply.records == (new,)


def test_change_rejects_time_regression_and_invalid_record():
    s = AgentState(1, last_change_time=5)
    with pytest.raises(TimeRegressionError):
        agent_on_middleware_change(s, QcmRecord(qchannel=1), 4)
    with pytest.raises(RecordValidationError):
        agent_on_middleware_change(s, QcmRecord(qcom_spec=b"\x01" * 16), 6)


def test_controller_change_visible_to_poll():
    r = QcmRecord(qchannel=9)
    s = agent_apply_controller_change(AgentState(1), r, 1)
    _, (reply,) = agent_handle_request(s, poll(2))
    assert reply.records == (r,)


def test_identical_controller_change_updates_time_only():
    r = QcmRecord(qchannel=9)
    s = agent_apply_controller_change(AgentState(1), r, 1)
    s2 = agent_apply_controller_change(s, r, 3)
    assert s2.local_record == r and s2.last_change_time == 3


def test_middleware_after_controller_wins():
    s = agent_apply_controller_change(AgentState(1), QcmRecord(qchannel=9), 1)
    s, _ = agent_on_middleware_change(s, QcmRecord(qchannel=10), 2)
    _, (reply,) = agent_handle_request(s, poll(2))
    assert reply.records[0].qchannel == 10


@given(
    st.lists(st.tuples(st.booleans(), records()), max_size=20),
    st.booleans(),
)
def test_poll_after_change_freshness(changes, async_on):
    s = AgentState(1, async_enabled=async_on)
    latest = s.local_record
    for t, (from_controller, r) in enumerate(changes):
        if from_controller:
            s = agent_apply_controller_change(s, r, t)
        else:
            before = s.local_record
            s, msg = agent_on_middleware_change(s, r, t)
            assert (msg is not None) == (async_on and before != r)
            if msg is not None:
                assert msg.xid == 0 and len(msg.records) == 1
        latest = r
        _, (reply,) = agent_handle_request(s, poll(t + 1))
        assert reply.records == (latest,) and reply.xid == t + 1


def test_flow_module_default_is_all_zero():
    assert flow_module_transform(QcmRecord()) == [
        ("QCHANNEL", 0), ("QCHANNEL_SPEC", 0), ("QCOM", 0),
        ("QCOM_SPEC", 0), ("QEC", 0), ("QEC_SPEC", 0),
    ]


def test_flow_module_identifier_passthrough():
    assert ("QCHANNEL", 5) in flow_module_transform(QcmRecord(qchannel=5))


def test_flow_module_blob_checksum():
    blob = bytes(range(1, 17))
    expected = 0
    for byte in blob:
        expected += byte
    stats = dict(flow_module_transform(QcmRecord(qcom=1, qcom_spec=blob)))
    assert stats["QCOM_SPEC"] == expected == 136


@given(records())
def test_flow_module_checksums_match_brute_force(r):
    stats = dict(flow_module_transform(r))
    chan = r.qchannel_spec
    chan_sum = 0
    for word in (chan.wavelength_pm, chan.mean_photon_milli, chan.symbol_rate_hz, chan.reserved):
        for shift in (24, 16, 8, 0):
            chan_sum += (word >> shift) & 0xFF
    ec = r.qec_spec
    ec_sum = sum(v >> 8 for v in (ec.n, ec.k, ec.d, ec.verify_circuit_id))
    ec_sum += sum(v & 0xFF for v in (ec.n, ec.k, ec.d, ec.verify_circuit_id))
    assert stats["QCHANNEL_SPEC"] == chan_sum % 65536
    assert stats["QEC_SPEC"] == ec_sum % 65536
    assert all(0 <= v <= 0xFFFF for v in stats.values())
