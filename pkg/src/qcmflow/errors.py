"""Exception hierarchy shared by every qcmflow module."""


class QcmError(Exception):
    """Base class for all domain errors raised by qcmflow."""


class RecordValidationError(QcmError, ValueError):
    """A record breaks one or more metadata invariants."""

    def __init__(self, violations):
        self.violations = list(violations)
        detail = "; ".join(str(v) for v in self.violations)
        super().__init__("invalid QCM record: " + detail)


class UnknownFieldError(QcmError, KeyError):
    def __init__(self, name):
        self.name = name
        super().__init__(name)

    def __str__(self):
        return "unknown QCM field %r" % (self.name,)


class CodecError(QcmError, ValueError):
    """Malformed wire data. ``offset`` is the byte offset of the problem."""

    def __init__(self, message, offset=None):
        self.offset = offset
        if offset is not None:
            message = "%s (at byte offset %d)" % (message, offset)
        super().__init__(message)


class ShortInputError(CodecError):
    pass


class InvalidLengthError(CodecError):
    pass


class UnknownMultipartTypeError(CodecError):
    pass


class PadError(CodecError):
    """Nonzero pad or reserved bytes under strict decoding."""


class SegmentOverflowError(CodecError):
    """Too many records for one multipart segment."""


class ReassemblyError(QcmError, ValueError):
    pass


class ProtocolError(QcmError):
    """A well-formed message used in the wrong place."""


class StaleMessageError(ProtocolError):
    pass


class TimeRegressionError(QcmError, ValueError):
    pass


class UnknownDeviceError(QcmError, KeyError):
    def __init__(self, device_id):
        self.device_id = device_id
        super().__init__(device_id)

    def __str__(self):
        return "unknown device %r" % (self.device_id,)


class DuplicateEntryError(QcmError, KeyError):
    def __init__(self, entry_id):
        self.entry_id = entry_id
        super().__init__(entry_id)

    def __str__(self):
        return "flow entry %r already installed" % (self.entry_id,)


class NodeStateError(QcmError, ValueError):
    """A device-model event that the node cannot accept."""


class SchedulingError(QcmError, ValueError):
    pass


class ConfigError(QcmError, ValueError):
    """Scenario configuration could not be parsed or validated."""
