"""Deterministic discrete-event kernel.

Events run in ``(time, seq)`` order where ``seq`` is the insertion counter,
so same-time events run in the order they were scheduled.  Message
delivery is FIFO per ``(src, dst)`` pair even when delays vary.
"""

import heapq
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction

from .errors import SchedulingError


class EventKind(Enum):
    MUTATION = "MUTATION"
    NODE_EVENT = "NODE_EVENT"
    POLL_TIMER = "POLL_TIMER"
    MSG_DELIVERY = "MSG_DELIVERY"
    CONTROLLER_CHANGE = "CONTROLLER_CHANGE"
    PACKET_IN = "PACKET_IN"


@dataclass(frozen=True, order=True)
class SimEvent:
    time: Fraction
    seq: int
    kind: EventKind = field(compare=False)
    payload: object = field(default=None, compare=False)


@dataclass(frozen=True)
class Envelope:
    src: object
    dst: object
    msg: object


def as_time(value):
    """Exact tick value.  Floats go through their decimal repr (2.5 -> 5/2)."""
    if isinstance(value, Fraction):
        t = value
    elif isinstance(value, float):
        t = Fraction(repr(value))
    else:
        t = Fraction(value)
    if t < 0:
        raise SchedulingError("negative time %s" % (value,))
    return t


def format_time(t):
    t = Fraction(t)
    if t.denominator == 1:
        return str(t.numerator)
    return repr(float(t))


class EventQueue:
    def __init__(self):
        self.clock = Fraction(0)
        self._heap = []
        self._seq = 0
        self._channel_tail = {}

    def __len__(self):
        return len(self._heap)

    def __bool__(self):
        return bool(self._heap)

    def schedule(self, time, kind, payload=None):
        time = as_time(time)
        if time < self.clock:
            raise SchedulingError("cannot schedule at %s, clock is %s" % (format_time(time), format_time(self.clock)))
        ev = SimEvent(time, self._seq, kind, payload)
        self._seq += 1
        heapq.heappush(self._heap, ev)
        return ev

    def deliver(self, msg, src, dst, now, delay=0):
        if delay < 0:
            raise SchedulingError("negative channel delay %s" % (delay,))
        at = as_time(now) + as_time(delay)
        # never overtake an earlier send on the same channel
        tail = self._channel_tail.get((src, dst))
        if tail is not None and at < tail:
            at = tail
        self._channel_tail[(src, dst)] = at
        return self.schedule(at, EventKind.MSG_DELIVERY, Envelope(src, dst, msg))

    def peek(self):
        return self._heap[0] if self._heap else None

    def pop(self):
        ev = heapq.heappop(self._heap)
        self.clock = ev.time
        return ev

    def pending(self, kind=None):
        return [ev for ev in sorted(self._heap) if kind is None or ev.kind is kind]


def schedule(queue, time, kind, payload=None):
    queue.schedule(time, kind, payload)
    return queue


def deliver(queue, msg, src, dst, now, delay=0):
    queue.deliver(msg, src, dst, now, delay)
    return queue
