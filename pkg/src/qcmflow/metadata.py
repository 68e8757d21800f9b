"""Quantum communication metadata (QCM) record.

A device's QCM row holds six fields: a channel id and its transmission
parameters, a communication protocol id and its parameters, and an error
correction id and its parameters.  Every ``*_spec`` field serializes to a
fixed 16-byte blob so that a full record packs into 56 bytes on the wire.

Records are immutable; updates return new records.
"""

import struct
from dataclasses import dataclass, field, fields, replace
from enum import IntEnum

from .errors import RecordValidationError, UnknownFieldError

SPEC_LEN = 16
U16_MAX = 0xFFFF
U32_MAX = 0xFFFFFFFF

FIELD_NAMES = ("qchannel", "qchannel_spec", "qcom", "qcom_spec", "qec", "qec_spec")
ID_FIELDS = ("qchannel", "qcom", "qec")

_CHANNEL_FMT = struct.Struct("!IIII")
_EC_FMT = struct.Struct("!HHHH8s")


class ComProtocol(IntEnum):
    NONE = 0
    QKD = 1
    QT = 2
    SDC = 3


def protocol_name(value):
    """Symbolic name for a QCOM id, or the decimal id if it is unnamed."""
    try:
        return ComProtocol(value).name
    except ValueError:
        return str(value)


def parse_protocol(text):
    text = str(text).strip()
    try:
        return int(ComProtocol[text.upper()])
    except KeyError:
        pass
    try:
        return int(text, 0)
    except ValueError:
        raise ValueError("unknown QCOM protocol %r" % text) from None


@dataclass(frozen=True)
class ChannelSpec:
    """Transmission/reception parameters of a quantum channel."""

    wavelength_pm: int = 0
    mean_photon_milli: int = 0
    symbol_rate_hz: int = 0
    reserved: int = 0

    def to_bytes(self):
        return _CHANNEL_FMT.pack(
            self.wavelength_pm, self.mean_photon_milli, self.symbol_rate_hz, self.reserved
        )

    @classmethod
    def from_bytes(cls, data):
        return cls(*_CHANNEL_FMT.unpack(bytes(data)))

    def is_zero(self):
        return self == ChannelSpec()

    def violations(self, name="qchannel_spec"):
        out = []
        for f in fields(self):
            v = getattr(self, f.name)
            if not isinstance(v, int) or not 0 <= v <= U32_MAX:
                out.append(Violation(name, "%s=%r is not an unsigned 32-bit value" % (f.name, v)))
        if self.reserved != 0:
            out.append(Violation(name, "reserved word must be zero"))
        return out


@dataclass(frozen=True)
class EcSpec:
    """Error-correction code parameters: code length, logical qubits, distance."""

    n: int = 0
    k: int = 0
    d: int = 0
    verify_circuit_id: int = 0
    reserved: bytes = bytes(8)

    def __post_init__(self):
        if isinstance(self.reserved, (bytearray, memoryview)):
            object.__setattr__(self, "reserved", bytes(self.reserved))

    def to_bytes(self):
        return _EC_FMT.pack(self.n, self.k, self.d, self.verify_circuit_id, self.reserved)

    @classmethod
    def from_bytes(cls, data):
        return cls(*_EC_FMT.unpack(bytes(data)))

    def is_zero(self):
        return self == EcSpec()

    def has_code(self):
        return bool(self.n or self.k or self.d)

    def violations(self, name="qec_spec"):
        out = []
        for attr in ("n", "k", "d", "verify_circuit_id"):
            v = getattr(self, attr)
            if not isinstance(v, int) or not 0 <= v <= U16_MAX:
                out.append(Violation(name, "%s=%r is not an unsigned 16-bit value" % (attr, v)))
        if not isinstance(self.reserved, bytes) or len(self.reserved) != 8:
            out.append(Violation(name, "reserved must be 8 bytes"))
        elif any(self.reserved):
            out.append(Violation(name, "reserved bytes must be zero"))
        return out


@dataclass(frozen=True)
class Violation:
    field: str
    message: str

    def __str__(self):
        return "%s: %s" % (self.field, self.message)


@dataclass(frozen=True)
class QcmRecord:
    qchannel: int = 0
    qchannel_spec: ChannelSpec = field(default_factory=ChannelSpec)
    qcom: int = 0
    qcom_spec: bytes = bytes(SPEC_LEN)
    qec: int = 0
    qec_spec: EcSpec = field(default_factory=EcSpec)

    def __post_init__(self):
        # normalize enum members and buffer types so equality is structural
        if isinstance(self.qcom, IntEnum):
            object.__setattr__(self, "qcom", int(self.qcom))
        if isinstance(self.qcom_spec, (bytearray, memoryview)):
            object.__setattr__(self, "qcom_spec", bytes(self.qcom_spec))

    def get(self, name):
        if name not in FIELD_NAMES:
            raise UnknownFieldError(name)
        return getattr(self, name)

    def as_dict(self):
        return {name: getattr(self, name) for name in FIELD_NAMES}


def make_default_record():
    return QcmRecord()


def _check_id(name, value):
    if isinstance(value, bool) or not isinstance(value, int) or not 0 <= value <= U16_MAX:
        return [Violation(name, "%r is not an unsigned 16-bit identifier" % (value,))]
    return []


def validate_record(r):
    """Return the list of invariant violations of ``r`` (empty when valid)."""
    out = []
    for name in ID_FIELDS:
        out += _check_id(name, getattr(r, name))

    if isinstance(r.qchannel_spec, ChannelSpec):
        out += r.qchannel_spec.violations()
    else:
        out.append(Violation("qchannel_spec", "expected ChannelSpec"))

    qcom_blob_ok = isinstance(r.qcom_spec, bytes) and len(r.qcom_spec) == SPEC_LEN
    if not qcom_blob_ok:
        out.append(Violation("qcom_spec", "must be exactly %d bytes" % SPEC_LEN))
    elif r.qcom == 0 and any(r.qcom_spec):
        out.append(Violation("qcom_spec", "must be all-zero when qcom is NONE"))

    if isinstance(r.qec_spec, EcSpec):
        out += r.qec_spec.violations()
        if r.qec == 0 and not r.qec_spec.is_zero():
            out.append(Violation("qec_spec", "must be all-zero when qec is 0"))
        elif r.qec != 0 and not r.qec_spec.has_code():
            out.append(Violation("qec", "nonzero qec requires nonzero n, k or d in qec_spec"))
    else:
        out.append(Violation("qec_spec", "expected EcSpec"))
    return out


def check_record(r):
    """Raise :class:`RecordValidationError` unless ``r`` is valid."""
    violations = validate_record(r)
    if violations:
        raise RecordValidationError(violations)
    return r


def diff_records(old, new):
    return {name for name in FIELD_NAMES if getattr(old, name) != getattr(new, name)}


def apply_updates(r, updates):
    """Apply several field updates at once; only the final record must validate.

    Coupled fields (an id and its spec) have to move together, e.g. switching
    ``qec`` from 0 to a code needs the new ``qec_spec`` in the same step.
    """
    updates = dict(updates)
    for name in updates:
        if name not in FIELD_NAMES:
            raise UnknownFieldError(name)
    if "qcom" in updates:
        updates["qcom"] = int(updates["qcom"])
    return check_record(replace(r, **updates))


def apply_field_update(r, name, value):
    return apply_updates(r, {name: value})


# -- canonical text form -------------------------------------------------

TEXT_LABELS = tuple(name.upper() for name in FIELD_NAMES)


def _format_kv(obj, names, reserved_hex=False):
    parts = ["%s=%d" % (n, getattr(obj, n)) for n in names]
    if reserved_hex:
        if any(obj.reserved):
            parts.append("reserved=" + obj.reserved.hex())
    elif obj.reserved:
        parts.append("reserved=%d" % obj.reserved)
    return " ".join(parts)


def format_field(name, value):
    if name in ("qchannel", "qec"):
        return str(value)
    if name == "qcom":
        return protocol_name(value)
    if name == "qcom_spec":
        return bytes(value).hex()
    if name == "qchannel_spec":
        return _format_kv(value, ("wavelength_pm", "mean_photon_milli", "symbol_rate_hz"))
    if name == "qec_spec":
        return _format_kv(value, ("n", "k", "d", "verify_circuit_id"), reserved_hex=True)
    raise UnknownFieldError(name)


def format_record(r):
    """One ``FIELD: value`` line per field, in table order."""
    return [
        "%s: %s" % (label, format_field(name, getattr(r, name)))
        for label, name in zip(TEXT_LABELS, FIELD_NAMES)
    ]


def _parse_kv(text):
    out = {}
    for token in text.split():
        key, sep, val = token.partition("=")
        if not sep:
            raise ValueError("expected key=value, got %r" % token)
        out[key] = val
    return out


def parse_field(name, text):
    text = text.strip()
    if name in ("qchannel", "qec"):
        return int(text, 0)
    if name == "qcom":
        return parse_protocol(text)
    if name == "qcom_spec":
        blob = bytes.fromhex(text)
        if len(blob) != SPEC_LEN:
            raise ValueError("QCOM_SPEC must be %d bytes" % SPEC_LEN)
        return blob
    if name == "qchannel_spec":
        kv = _parse_kv(text)
        try:
            return ChannelSpec(**{k: int(v, 0) for k, v in kv.items()})
        except TypeError as exc:
            raise ValueError(str(exc)) from None
    if name == "qec_spec":
        kv = _parse_kv(text)
        reserved = bytes.fromhex(kv.pop("reserved", "00" * 8))
        try:
            return EcSpec(reserved=reserved, **{k: int(v, 0) for k, v in kv.items()})
        except TypeError as exc:
            raise ValueError(str(exc)) from None
    raise UnknownFieldError(name)


def parse_record(lines):
    """Inverse of :func:`format_record`.  Missing fields keep their defaults."""
    if isinstance(lines, str):
        lines = lines.splitlines()
    values = {}
    for lineno, line in enumerate(lines, 1):
        if not line.strip():
            continue
        label, sep, rest = line.partition(":")
        label = label.strip().upper()
        if not sep or label not in TEXT_LABELS:
            raise ValueError("line %d: expected 'FIELD: value', got %r" % (lineno, line))
        name = FIELD_NAMES[TEXT_LABELS.index(label)]
        if name in values:
            raise ValueError("line %d: duplicate field %s" % (lineno, label))
        try:
            values[name] = parse_field(name, rest)
        except ValueError as exc:
            raise ValueError("line %d: %s" % (lineno, exc)) from None
    return check_record(QcmRecord(**values))
