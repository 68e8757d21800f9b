"""Byte-exact codec for the OFPMP_QCM multipart request/reply messages.

Frame layout (big-endian)::

    ofp_header   version(1) type(1) length(2) xid(4)          8 bytes
    preamble     mp_type(2) pad(4) flags(2)                   8 bytes
    body         n x ofp_qcm_stats                           56 bytes each

    ofp_qcm_stats
        qchannel(2) qchannel_spec(16) qcom(2) qcom_spec(16)
        qec(2) qec_spec(16) pad(2)

The preamble keeps the pad ahead of the flags word, which differs from
stock OpenFlow 1.4 (type, flags, pad).
"""

import struct
from dataclasses import dataclass, field
from enum import Enum

from .errors import (
    CodecError,
    InvalidLengthError,
    PadError,
    ProtocolError,
    ReassemblyError,
    SegmentOverflowError,
    ShortInputError,
    UnknownMultipartTypeError,
)
from .metadata import SPEC_LEN, ChannelSpec, EcSpec, QcmRecord, format_record, validate_record

OFP_VERSION = 5
OFPT_MULTIPART_REQUEST = 18
OFPT_MULTIPART_REPLY = 19
OFPMP_QCM = 17
OFPMPF_REQ_MORE = 1 << 0

HEADER_LEN = 8
PREAMBLE_LEN = 16
STATS_LEN = 56
MAX_MESSAGE_LEN = 0xFFFF
MAX_RECORDS_PER_SEGMENT = (MAX_MESSAGE_LEN - PREAMBLE_LEN) // STATS_LEN  # 1169

ASYNC_XID = 0

_HEADER = struct.Struct("!BBHI")
_MP = struct.Struct("!H4sH")
_STATS = struct.Struct("!H16sH16sH16s2s")

assert _HEADER.size == HEADER_LEN
assert _HEADER.size + _MP.size == PREAMBLE_LEN
assert _STATS.size == STATS_LEN


class Direction(Enum):
    REQUEST = OFPT_MULTIPART_REQUEST
    REPLY = OFPT_MULTIPART_REPLY


@dataclass(frozen=True)
class OfpHeader:
    version: int
    msg_type: int
    length: int
    xid: int


def encode_header(h):
    if h.length < HEADER_LEN:
        raise InvalidLengthError("header length %d is below %d" % (h.length, HEADER_LEN))
    try:
        return _HEADER.pack(h.version, h.msg_type, h.length, h.xid)
    except struct.error as exc:
        raise CodecError("header field out of range: %s" % exc) from None


def decode_header(b, offset=0):
    if len(b) - offset < HEADER_LEN:
        raise ShortInputError(
            "need %d header bytes, have %d" % (HEADER_LEN, max(len(b) - offset, 0)), offset
        )
    h = OfpHeader(*_HEADER.unpack_from(b, offset))
    if h.length < HEADER_LEN:
        raise InvalidLengthError("header length field %d is below %d" % (h.length, HEADER_LEN), offset + 2)
    return h


# -- stats body ------------------------------------------------------------

def encode_stats(r):
    violations = validate_record(r)
    if violations:
        raise CodecError("cannot encode invalid record: " + "; ".join(map(str, violations)))
    return _STATS.pack(
        r.qchannel,
        r.qchannel_spec.to_bytes(),
        r.qcom,
        r.qcom_spec,
        r.qec,
        r.qec_spec.to_bytes(),
        b"\x00\x00",
    )


def decode_stats(b, strict=True, offset=0):
    """Parse one 56-byte stats body.

    ``offset`` only shifts the byte positions reported in errors.  Lenient
    mode skips the pad and record-invariant checks.
    """
    if len(b) != STATS_LEN:
        raise InvalidLengthError("stats body must be %d bytes, got %d" % (STATS_LEN, len(b)), offset)
    qchannel, chan, qcom, qcom_spec, qec, ec, pad = _STATS.unpack(bytes(b))
    r = QcmRecord(
        qchannel=qchannel,
        qchannel_spec=ChannelSpec.from_bytes(chan),
        qcom=qcom,
        qcom_spec=qcom_spec,
        qec=qec,
        qec_spec=EcSpec.from_bytes(ec),
    )
    if strict:
        if any(pad):
            raise PadError("nonzero stats pad", offset + STATS_LEN - 2)
        if r.qchannel_spec.reserved:
            raise PadError("nonzero QCHANNEL_SPEC reserved word", offset + 2 + 12)
        if any(r.qec_spec.reserved):
            raise PadError("nonzero QEC_SPEC reserved bytes", offset + 2 + SPEC_LEN + 2 + SPEC_LEN + 2 + 8)
        violations = validate_record(r)
        if violations:
            raise CodecError("decoded record is invalid: " + "; ".join(map(str, violations)), offset)
    return r


# -- multipart frames ---------------------------------------------------------

@dataclass(frozen=True)
class QcmMultipart:
    direction: Direction
    xid: int
    flags: int = 0
    records: tuple = field(default_factory=tuple)
    version: int = OFP_VERSION
    mp_type: int = OFPMP_QCM

    def __post_init__(self):
        if not isinstance(self.records, tuple):
            object.__setattr__(self, "records", tuple(self.records))

    @property
    def length(self):
        return PREAMBLE_LEN + STATS_LEN * len(self.records)

    @property
    def header(self):
        return OfpHeader(self.version, self.direction.value, self.length, self.xid)

    @property
    def more(self):
        return bool(self.flags & OFPMPF_REQ_MORE)

    @property
    def is_async(self):
        return self.direction is Direction.REPLY and self.xid == ASYNC_XID


def encode_multipart(m):
    if len(m.records) > MAX_RECORDS_PER_SEGMENT:
        raise SegmentOverflowError(
            "%d records need %d bytes, over the %d-byte segment limit; use fragment()"
            % (len(m.records), m.length, MAX_MESSAGE_LEN)
        )
    if m.mp_type != OFPMP_QCM:
        raise UnknownMultipartTypeError("multipart type %d is not OFPMP_QCM" % m.mp_type)
    parts = [encode_header(m.header)]
    try:
        parts.append(_MP.pack(m.mp_type, bytes(4), m.flags))
    except struct.error as exc:
        raise CodecError("flags out of range: %s" % exc) from None
    parts.extend(encode_stats(r) for r in m.records)
    return b"".join(parts)


def decode_multipart(b, strict=True, offset=0):
    b = bytes(b)
    h = decode_header(b)
    if len(b) < PREAMBLE_LEN:
        raise ShortInputError("need %d preamble bytes, have %d" % (PREAMBLE_LEN, len(b)), offset)
    if h.length != len(b):
        raise InvalidLengthError(
            "header declares %d bytes but frame has %d" % (h.length, len(b)), offset + 2
        )
    try:
        direction = Direction(h.msg_type)
    except ValueError:
        raise CodecError("message type %d is not a multipart request/reply" % h.msg_type, offset + 1) from None
    if strict and h.version != OFP_VERSION:
        raise CodecError("unsupported OpenFlow version %d" % h.version, offset)
    mp_type, pad, flags = _MP.unpack_from(b, HEADER_LEN)
    if mp_type != OFPMP_QCM:
        raise UnknownMultipartTypeError("unknown multipart type %d" % mp_type, offset + HEADER_LEN)
    if strict and any(pad):
        raise PadError("nonzero multipart pad", offset + HEADER_LEN + 2)
    if strict and flags & ~OFPMPF_REQ_MORE:
        raise CodecError("undefined multipart flags 0x%04x" % flags, offset + HEADER_LEN + 6)
    body = len(b) - PREAMBLE_LEN
    if body % STATS_LEN:
        raise InvalidLengthError(
            "body of %d bytes is not a multiple of %d" % (body, STATS_LEN), offset + PREAMBLE_LEN
        )
    records = tuple(
        decode_stats(b[i:i + STATS_LEN], strict=strict, offset=offset + i)
        for i in range(PREAMBLE_LEN, len(b), STATS_LEN)
    )
    return QcmMultipart(direction, h.xid, flags, records, version=h.version, mp_type=mp_type)


def split_frames(b):
    """Split a byte stream of back-to-back frames using their length fields."""
    b = bytes(b)
    frames = []
    pos = 0
    while pos < len(b):
        h = decode_header(b, pos)
        if pos + h.length > len(b):
            raise ShortInputError(
                "truncated frame: header declares %d bytes, %d available" % (h.length, len(b) - pos),
                pos,
            )
        frames.append((pos, b[pos:pos + h.length]))
        pos += h.length
    return frames


def decode_stream(b, strict=True):
    return [decode_multipart(frame, strict=strict, offset=pos) for pos, frame in split_frames(b)]


# -- fragmentation ----------------------------------------------------------

def fragment(records, xid, direction):
    records = tuple(records)
    chunks = [
        records[i:i + MAX_RECORDS_PER_SEGMENT]
        for i in range(0, len(records), MAX_RECORDS_PER_SEGMENT)
    ] or [()]
    last = len(chunks) - 1
    return [
        QcmMultipart(direction, xid, 0 if i == last else OFPMPF_REQ_MORE, chunk)
        for i, chunk in enumerate(chunks)
    ]


def reassemble(segments):
    segments = list(segments)
    if not segments:
        raise ReassemblyError("no segments")
    first = segments[0]
    out = []
    for i, seg in enumerate(segments):
        if seg.xid != first.xid:
            raise ReassemblyError("segment %d has xid %d, expected %d" % (i, seg.xid, first.xid))
        if seg.direction is not first.direction:
            raise ReassemblyError("segment %d changes direction" % i)
        final = i == len(segments) - 1
        if final and seg.more:
            raise ReassemblyError("incomplete sequence: final segment has REQ_MORE set")
        if not final and not seg.more:
            raise ReassemblyError("segment %d ends the sequence early (REQ_MORE clear)" % i)
        out.extend(seg.records)
    return out


def expect(m, direction):
    if m.direction is not direction:
        raise ProtocolError("expected %s, got %s" % (direction.name, m.direction.name))
    return m


# -- hex dump --------------------------------------------------------------

def hexdump(b, width=16):
    b = bytes(b)
    return "\n".join(
        " ".join("%02x" % c for c in b[i:i + width]) for i in range(0, len(b), width)
    )


def parse_hexdump(text):
    out = bytearray()
    for lineno, line in enumerate(text.splitlines(), 1):
        for token in line.split():
            if len(token) != 2:
                raise CodecError("line %d: bad hex token %r" % (lineno, token), len(out))
            try:
                out.append(int(token, 16))
            except ValueError:
                raise CodecError("line %d: bad hex token %r" % (lineno, token), len(out)) from None
    return bytes(out)


def describe(m):
    """Canonical text rendering of a decoded multipart message."""
    lines = [
        "DIRECTION: %s" % m.direction.name,
        "XID: %d" % m.xid,
        "FLAGS: 0x%04x%s" % (m.flags, " REQ_MORE" if m.more else ""),
        "RECORDS: %d" % len(m.records),
    ]
    for i, r in enumerate(m.records):
        lines.append("")
        lines.append("# record %d" % i)
        lines.extend(format_record(r))
    return lines
