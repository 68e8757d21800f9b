"""OpenFlow agent on a quantum network device.

The agent owns the device's QCM table (one current row), answers
controller polls, pushes unsolicited replies when the middleware changes
the row, and applies changes the controller asks for.  All transitions are
pure: they take an :class:`AgentState` and return a new one.
"""

from dataclasses import dataclass, field, replace

from .errors import ProtocolError, TimeRegressionError
from .metadata import FIELD_NAMES, QcmRecord, check_record, diff_records
from .wire import ASYNC_XID, Direction, QcmMultipart, decode_multipart, fragment

U32_MASK = 0xFFFFFFFF


@dataclass(frozen=True)
class AgentState:
    device_id: int
    local_record: QcmRecord = field(default_factory=QcmRecord)
    last_change_time: object = 0
    async_enabled: bool = True
    xid_counter: int = 0


def _check_time(s, now):
    if now < s.last_change_time:
        raise TimeRegressionError(
            "device %d: time %s precedes last change at %s" % (s.device_id, now, s.last_change_time)
        )


def agent_handle_request(s, req):
    """Answer a QCM poll.

    ``req`` may be raw frame bytes, which are decoded strictly; codec errors
    propagate and no reply is produced.
    """
    if isinstance(req, (bytes, bytearray, memoryview)):
        req = decode_multipart(req)
    if req.direction is not Direction.REQUEST:
        raise ProtocolError("device %d: expected a multipart request" % s.device_id)
    if req.xid == ASYNC_XID:
        raise ProtocolError("device %d: xid 0 is reserved for unsolicited replies" % s.device_id)
    replies = fragment([s.local_record], req.xid, Direction.REPLY)
    return replace(s, xid_counter=(s.xid_counter + 1) & U32_MASK), replies


def agent_on_middleware_change(s, new_record, now):
    check_record(new_record)
    _check_time(s, now)
    if not diff_records(s.local_record, new_record):
        return s, None
    s = replace(s, local_record=new_record, last_change_time=now)
    if not s.async_enabled:
        return s, None
    (msg,) = fragment([new_record], ASYNC_XID, Direction.REPLY)
    return s, msg


def agent_apply_controller_change(s, requested, now):
    check_record(requested)
    _check_time(s, now)
    return replace(s, local_record=requested, last_change_time=now)


def spec_checksum(blob):
    return sum(bytes(blob)) % 0x10000


def flow_module_transform(r):
    """Flatten a record into six 16-bit OpenFlow statistics, in table order.

    Identifier fields pass through; spec blobs are reduced to the byte sum
    of their 16-byte encoding, mod 2**16.
    """
    out = []
    for name in FIELD_NAMES:
        value = getattr(r, name)
        if name == "qcom_spec":
            value = spec_checksum(value)
        elif name.endswith("_spec"):
            value = spec_checksum(value.to_bytes())
        out.append((name.upper(), value))
    return out
