"""Controller side: the unified QCM view and the QCM flow table.

The view keeps the last record heard from each device together with when
it was applied and whether it came from a poll reply or an unsolicited
push.  A message older than the stored entry is rejected, so the latest
applied state always wins.
"""

from dataclasses import dataclass, field, replace
from enum import Enum
from types import MappingProxyType

from .errors import DuplicateEntryError, ProtocolError, StaleMessageError, UnknownDeviceError
from .metadata import ID_FIELDS, check_record
from .wire import ASYNC_XID, Direction, QcmMultipart, decode_multipart, reassemble

DEFAULT_POLL_PERIOD = 5


class Origin(Enum):
    POLL = "POLL"
    ASYNC = "ASYNC"


@dataclass(frozen=True)
class ViewEntry:
    record: object
    updated_at: object
    origin: Origin


@dataclass(frozen=True)
class ControllerView:
    devices: frozenset = frozenset()
    entries: MappingProxyType = field(default_factory=lambda: MappingProxyType({}))
    poll_period: object = DEFAULT_POLL_PERIOD

    def __post_init__(self):
        object.__setattr__(self, "devices", frozenset(self.devices))
        if not isinstance(self.entries, MappingProxyType):
            object.__setattr__(self, "entries", MappingProxyType(dict(self.entries)))

    def with_entry(self, device_id, entry):
        entries = dict(self.entries)
        entries[device_id] = entry
        return replace(self, entries=MappingProxyType(entries))


def _known(v, device_id):
    if device_id not in v.devices:
        raise UnknownDeviceError(device_id)


def _decode(msg):
    if isinstance(msg, (bytes, bytearray, memoryview)):
        return decode_multipart(msg)
    return msg


def _store(v, device_id, record, now, origin):
    current = v.entries.get(device_id)
    if current is not None and now < current.updated_at:
        raise StaleMessageError(
            "device %d: message at %s is older than view entry at %s"
            % (device_id, now, current.updated_at)
        )
    return v.with_entry(device_id, ViewEntry(record, now, origin))


def controller_poll(v, device_id, now, xid):
    _known(v, device_id)
    if xid == ASYNC_XID:
        raise ProtocolError("xid 0 is reserved for unsolicited replies")
    return QcmMultipart(Direction.REQUEST, xid)


def controller_handle_reply(v, device_id, segments, now):
    _known(v, device_id)
    segments = [_decode(s) for s in segments]
    for seg in segments:
        if seg.direction is not Direction.REPLY:
            raise ProtocolError("device %d: expected reply segments" % device_id)
        if seg.xid == ASYNC_XID:
            raise ProtocolError("device %d: unsolicited reply passed as poll reply" % device_id)
    records = reassemble(segments)
    if len(records) != 1:
        raise ProtocolError("device %d: reply carries %d records, expected 1" % (device_id, len(records)))
    return _store(v, device_id, check_record(records[0]), now, Origin.POLL)


def controller_handle_async(v, device_id, msg, now):
    _known(v, device_id)
    msg = _decode(msg)
    if msg.direction is not Direction.REPLY or msg.xid != ASYNC_XID:
        raise ProtocolError("device %d: unsolicited update must be a REPLY with xid 0" % device_id)
    if msg.more or len(msg.records) != 1:
        raise ProtocolError("device %d: unsolicited update must carry exactly one record" % device_id)
    return _store(v, device_id, check_record(msg.records[0]), now, Origin.ASYNC)


def controller_query(v, device_id):
    entry = v.entries.get(device_id)
    return None if entry is None else entry.record


@dataclass(frozen=True)
class ChangeDirective:
    """Controller-to-agent instruction to overwrite the device's QCM row.

    There is no wire format for this; it travels as a simulator message.
    """

    device_id: int
    record: object


def controller_request_change(v, device_id, record):
    _known(v, device_id)
    check_record(record)
    return ChangeDirective(device_id, record)


# -- QCM flow table -----------------------------------------------------------

@dataclass(frozen=True)
class Action:
    name: str
    params: tuple = ()

    def __str__(self):
        if not self.params:
            return self.name
        return "%s(%s)" % (self.name, ",".join("%s=%s" % kv for kv in self.params))


@dataclass(frozen=True)
class FlowMatch:
    """Exact-or-wildcard match on the identifier fields; ``None`` is a wildcard."""

    qchannel: object = None
    qcom: object = None
    qec: object = None

    def matches(self, attrs):
        for name in ID_FIELDS:
            want = getattr(self, name)
            if want is not None and getattr(attrs, name) != want:
                return False
        return True


@dataclass(frozen=True)
class QcmFlowEntry:
    entry_id: int
    priority: int
    match: FlowMatch = field(default_factory=FlowMatch)
    actions: tuple = ()

    def __post_init__(self):
        if not isinstance(self.actions, tuple):
            object.__setattr__(self, "actions", tuple(self.actions))


@dataclass(frozen=True)
class QcmFlowTable:
    entries: MappingProxyType = field(default_factory=lambda: MappingProxyType({}))

    def __len__(self):
        return len(self.entries)

    def __contains__(self, entry_id):
        return entry_id in self.entries

    def get(self, entry_id):
        return self.entries.get(entry_id)


def install_flow_entry(table, entry):
    if entry.entry_id in table.entries:
        raise DuplicateEntryError(entry.entry_id)
    entries = dict(table.entries)
    entries[entry.entry_id] = entry
    return QcmFlowTable(MappingProxyType(entries))


def match_packet_in(table, attrs):
    """Actions of the best matching entry: highest priority, then lowest id."""
    best = None
    for entry in table.entries.values():
        if not entry.match.matches(attrs):
            continue
        if best is None or (-entry.priority, entry.entry_id) < (-best.priority, best.entry_id):
            best = entry
    return [] if best is None else list(best.actions)
