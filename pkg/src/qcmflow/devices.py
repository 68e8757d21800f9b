"""Behavioral models of quantum storage and repeater nodes.

No quantum state is simulated.  The models only track enough state to
decide when the node's QCM metadata changes, and report each change as a
tuple of ``(field, value)`` mutations to be applied to the QCM row in one
step.
"""

from collections import deque
from dataclasses import dataclass, field, replace
from enum import Enum

from .errors import NodeStateError
from .metadata import FIELD_NAMES, ChannelSpec, EcSpec, QcmRecord, check_record, apply_updates


# -- node events ------------------------------------------------------------

@dataclass(frozen=True)
class Read:
    slot: int


@dataclass(frozen=True)
class Write:
    slot: int


@dataclass(frozen=True)
class Measure:
    slot: int


@dataclass(frozen=True)
class QecCycle:
    pass


@dataclass(frozen=True)
class SetQec:
    code: int
    spec: EcSpec = field(default_factory=EcSpec)


@dataclass(frozen=True)
class AdvanceStage:
    pass


@dataclass(frozen=True)
class Retune:
    spec: ChannelSpec


def _qec_mutations(ev):
    # validate the pair before it reaches a QCM row
    check_record(QcmRecord(qec=ev.code, qec_spec=ev.spec))
    return (("qec", ev.code), ("qec_spec", ev.spec))


# -- storage node -------------------------------------------------------------

@dataclass(frozen=True)
class MemoryNodeState:
    slots: int
    active_qec: tuple = (0, EcSpec())
    stabilization_on: bool = True
    pending_requests: tuple = ()
    served: int = 0


def memory_node_step(s, ev, now):
    """READ/WRITE/MEASURE queue a request, QEC_CYCLE services the oldest
    one, SET_QEC swaps the active code and is the only metadata change."""
    if isinstance(ev, (Read, Write, Measure)):
        if not 0 <= ev.slot < s.slots:
            raise NodeStateError("slot %d out of range for %d-slot node" % (ev.slot, s.slots))
        return replace(s, pending_requests=s.pending_requests + (ev,)), ()
    if isinstance(ev, QecCycle):
        if s.pending_requests:
            s = replace(s, pending_requests=s.pending_requests[1:], served=s.served + 1)
        return s, ()
    if isinstance(ev, SetQec):
        muts = _qec_mutations(ev)
        return replace(s, active_qec=(ev.code, ev.spec)), muts
    raise NodeStateError("memory node cannot handle %r" % (ev,))


# -- repeater node ------------------------------------------------------------

class Stage(Enum):
    IDLE = "IDLE"
    PURIFICATION = "PURIFICATION"
    SWAP = "SWAP"


NEXT_STAGE = {
    Stage.IDLE: Stage.PURIFICATION,
    Stage.PURIFICATION: Stage.SWAP,
    Stage.SWAP: Stage.IDLE,
}


@dataclass(frozen=True)
class RepeaterNodeState:
    stage: Stage = Stage.IDLE
    active_qec: tuple = (0, EcSpec())
    link_quality_milli: int = 0


def repeater_node_step(s, ev, now):
    if isinstance(ev, AdvanceStage):
        return replace(s, stage=NEXT_STAGE[s.stage]), ()
    if isinstance(ev, Retune):
        check_record(QcmRecord(qchannel_spec=ev.spec))
        return s, (("qchannel_spec", ev.spec),)
    if isinstance(ev, SetQec):
        muts = _qec_mutations(ev)
        return replace(s, active_qec=(ev.code, ev.spec)), muts
    raise NodeStateError("repeater node cannot handle %r" % (ev,))


# -- scripted mutations -------------------------------------------------------

@dataclass(frozen=True)
class MutationScript:
    """Time-ordered ``(time, field, value)`` triples."""

    entries: tuple = ()

    def __post_init__(self):
        entries = tuple(tuple(e) for e in self.entries)
        for t, name, _ in entries:
            if name not in FIELD_NAMES:
                raise NodeStateError("script names unknown field %r" % (name,))
            if t < 0:
                raise NodeStateError("script time %s is negative" % (t,))
        for (t0, _, _), (t1, _, _) in zip(entries, entries[1:]):
            if not t1 > t0:
                raise NodeStateError("script times must be strictly increasing (%s then %s)" % (t0, t1))
        object.__setattr__(self, "entries", entries)

    def __len__(self):
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries)


class ScriptedMutationSource:
    """Fires each script triple exactly once, at exactly its scheduled time."""

    def __init__(self, script):
        self.script = script
        self._by_time = {t: (name, value) for t, name, value in script}
        self._fired = set()

    def __call__(self, now):
        hit = self._by_time.get(now)
        if hit is None or now in self._fired:
            return None
        self._fired.add(now)
        return hit


def scripted_mutation_source(source, now):
    return source(now)


def apply_mutations(record, mutations):
    return apply_updates(record, dict(mutations))
