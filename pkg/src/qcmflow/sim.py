"""Controller/agent simulation over the discrete-event kernel.

A :class:`Topology` lists the devices (each with a metadata mutation
script and optional node-model events), the controller's sync mode and the
channel delay.  :func:`run` plays it out and returns a :class:`Trace`.

Sync modes:

POLL
    the controller polls every device each ``poll_period`` ticks.
ASYNC
    agents push an unsolicited reply whenever their QCM row changes.
MIXED
    agents notify the controller when they sense a change and the
    controller answers with a poll.  This is the behavior of the reference
    run: a "state change sensed" notice is raised even when the sensed
    value equals the stored one, while the QCM row itself only changes on
    a real difference.
"""

import random
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction

from . import agent as ag
from . import controller as ctl
from . import devices as dev
from .engine import EventKind, EventQueue, as_time, format_time
from .errors import ConfigError, QcmError, SchedulingError
from .metadata import (
    ChannelSpec,
    ComProtocol,
    EcSpec,
    QcmRecord,
    diff_records,
    format_record,
)
from .wire import decode_multipart, encode_multipart

CONTROLLER = "controller"


class Mode(Enum):
    POLL = "POLL"
    ASYNC = "ASYNC"
    MIXED = "MIXED"


class TraceMode(Enum):
    CANONICAL = "canonical"
    LEGACY_FIG8 = "legacy-fig8"


@dataclass(frozen=True)
class DeviceConfig:
    device_id: int
    model: str = "scripted"
    script: dev.MutationScript = field(default_factory=dev.MutationScript)
    node_events: tuple = ()
    initial: QcmRecord = field(default_factory=QcmRecord)
    slots: int = 4


@dataclass(frozen=True)
class Topology:
    devices: tuple = ()
    channel_delay: Fraction = Fraction(0)
    mode: Mode = Mode.MIXED
    poll_period: Fraction = Fraction(ctl.DEFAULT_POLL_PERIOD)
    initial_sync: bool = True
    controller_changes: tuple = ()
    flow_entries: tuple = ()
    packet_ins: tuple = ()
    random_events: int = 0
    random_window: object = None

    def __post_init__(self):
        ids = [d.device_id for d in self.devices]
        if len(set(ids)) != len(ids):
            raise ConfigError("duplicate device ids in topology")
        if self.poll_period <= 0:
            raise ConfigError("poll_period must be positive")
        if self.channel_delay < 0:
            raise ConfigError("channel_delay must be non-negative")


@dataclass(frozen=True)
class Trace:
    entries: tuple
    final_clock: Fraction

    def lines(self):
        return [line for _, line in self.entries]

    def text(self):
        return "".join(line + "\n" for line in self.lines())


@dataclass(frozen=True)
class ChangeNotice:
    device_id: int


@dataclass(frozen=True)
class PacketIn:
    device_id: int
    attrs: QcmRecord


# -- trace rendering ----------------------------------------------------------

SEPARATOR = "-----"

LEGACY_PROTOCOL_NAMES = {
    ComProtocol.NONE: "None",
    ComProtocol.QKD: "Quantum Key Distribution",
    ComProtocol.QT: "Quantum Teleportation",
    ComProtocol.SDC: "Binary Dense Coding",
}


class CanonicalRenderer:
    def sensed(self, t, device_id, changed):
        what = ",".join(sorted(changed)) if changed else "no field changed"
        return ["%s dev %d: metadata change sensed (%s)" % (format_time(t), device_id, what)]

    def request(self, t, device_id, xid):
        return ["%s controller: QCM request to dev %d xid=%d" % (format_time(t), device_id, xid)]

    def received(self, t, device_id, xid, record, origin):
        head = "%s controller: QCM %s from dev %d xid=%d" % (format_time(t), origin.value, device_id, xid)
        tail = "%s controller: waiting for state change" % format_time(t)
        return [head] + ["  " + line for line in format_record(record)] + [tail, SEPARATOR]

    def change_request(self, t, device_id, record):
        return ["%s controller: change request to dev %d" % (format_time(t), device_id)]

    def change_applied(self, t, device_id, changed):
        what = ",".join(sorted(changed)) if changed else "no field changed"
        return ["%s dev %d: controller change applied (%s)" % (format_time(t), device_id, what)]

    def node_event(self, t, device_id, ev):
        return ["%s dev %d: node event %r" % (format_time(t), device_id, ev)]

    def packet_in(self, t, device_id, actions):
        acts = ", ".join(str(a) for a in actions) if actions else "no match"
        return ["%s controller: packet-in from dev %d -> %s" % (format_time(t), device_id, acts)]

    def error(self, t, text):
        return ["%s error: %s" % (format_time(t), text)]

    def final(self, t_end):
        return ["%.1f" % float(t_end)]


class LegacyFig8Renderer(CanonicalRenderer):
    """Reproduces the line vocabulary of the reference SimPy run.

    Field values are masked as ``#####`` except the protocol name, and the
    QPROTO_SPEC line appears twice, exactly as the reference output prints
    it.  Events outside that vocabulary render nothing.
    """

    def sensed(self, t, device_id, changed):
        return ["Quantum METADATA STATE change sensed. Collecting QMD attributes at %s" % format_time(t)]

    def request(self, t, device_id, xid):
        return ["QMD Requested by Controller....."]

    def received(self, t, device_id, xid, record, origin):
        try:
            proto = LEGACY_PROTOCOL_NAMES[ComProtocol(record.qcom)]
        except ValueError:
            proto = "Protocol %d" % record.qcom
        return [
            "Receiving QMD attributes .... begins:",
            "QPROTO: %s Received" % proto,
            "QPROTO_SPEC: ##### Received",
            "QCHANNEL: ##### Received",
            "QCHANNEL-SPEC: ##### Received",
            "QPROTO_SPEC: ##### Received",
            "Waiting for STATE change",
            SEPARATOR,
        ]

    def change_request(self, t, device_id, record):
        return []

    def change_applied(self, t, device_id, changed):
        return []

    def node_event(self, t, device_id, ev):
        return []

    def packet_in(self, t, device_id, actions):
        return []

    def error(self, t, text):
        return []


RENDERERS = {
    TraceMode.CANONICAL: CanonicalRenderer,
    TraceMode.LEGACY_FIG8: LegacyFig8Renderer,
}


# -- randomized inputs --------------------------------------------------------

def random_channel_spec(rng):
    return ChannelSpec(
        rng.randrange(1 << 32), rng.randrange(1 << 32), rng.randrange(1 << 32), 0
    )


def random_ec_spec(rng):
    while True:
        spec = EcSpec(rng.randrange(1 << 16), rng.randrange(1 << 16), rng.randrange(1 << 16), rng.randrange(1 << 16))
        if spec.has_code():
            return spec


def random_mutation(rng):
    """A batch of ``(field, value)`` updates that keeps any valid record valid."""
    kind = rng.randrange(4)
    if kind == 0:
        return (("qchannel", rng.randrange(1 << 16)),)
    if kind == 1:
        return (("qchannel_spec", random_channel_spec(rng)),)
    if kind == 2:
        qcom = rng.choice([0, 1, 2, 3, rng.randrange(1 << 16)])
        blob = bytes(16) if qcom == 0 else bytes(rng.randrange(256) for _ in range(16))
        return (("qcom", qcom), ("qcom_spec", blob))
    qec = rng.choice([0, rng.randrange(1, 1 << 16)])
    return (("qec", qec), ("qec_spec", EcSpec() if qec == 0 else random_ec_spec(rng)))


def random_record(rng):
    r = QcmRecord()
    for muts in (random_mutation(rng) for _ in range(4)):
        r = dev.apply_mutations(r, muts)
    return r


def _random_times(rng, count, t_end, resolution=4):
    ticks = rng.sample(range(int(t_end * resolution) + 1), count)
    return sorted(Fraction(k, resolution) for k in ticks)


def random_topology(rng, n_devices=None, n_mutations=100, t_end=100, mode=None, delay=None):
    """Random scripted topology with ``n_mutations`` middleware changes in total."""
    n_devices = n_devices or rng.randint(1, 16)
    mode = mode or rng.choice(list(Mode))
    delay = Fraction(rng.randrange(0, 5), 2) if delay is None else as_time(delay)
    ids = rng.sample(range(1, 1000), n_devices)
    per_device = {d: 0 for d in ids}
    for _ in range(n_mutations):
        per_device[rng.choice(ids)] += 1
    devices = []
    for d in ids:
        times = _random_times(rng, per_device[d], t_end)
        script = []
        for t in times:
            # single-field triples that are valid against any record;
            # coupled id/spec pairs arrive through random_events instead
            name, value = rng.choice(
                [("qchannel", rng.randrange(1 << 16)), ("qchannel_spec", random_channel_spec(rng)),
                 ("qcom", rng.randrange(1, 4))]
            )
            script.append((t, name, value))
        devices.append(DeviceConfig(d, "scripted", dev.MutationScript(script), initial=random_record(rng)))
    changes = tuple(
        (t, rng.choice(ids), random_record(rng)) for t in _random_times(rng, rng.randrange(0, 4), t_end)
    )
    return Topology(
        devices=tuple(devices),
        channel_delay=delay,
        mode=mode,
        poll_period=Fraction(rng.randint(1, 10)),
        controller_changes=changes,
        random_events=rng.randrange(0, 20),
        random_window=Fraction(t_end),
    )


# -- simulation -----------------------------------------------------------------

class Simulation:
    def __init__(self, topology, t_end, seed=0, trace_mode=TraceMode.CANONICAL):
        self.topology = topology
        self.t_end = as_time(t_end)
        self.seed = seed
        self.renderer = RENDERERS[TraceMode(trace_mode)]()
        self.queue = EventQueue()
        self.entries = []
        self.late_entries = []
        self._finished = False

        mode = topology.mode
        self.agents = {
            d.device_id: ag.AgentState(d.device_id, d.initial, Fraction(0), async_enabled=mode is Mode.ASYNC)
            for d in topology.devices
        }
        self.configs = {d.device_id: d for d in topology.devices}
        self.nodes = {}
        for d in topology.devices:
            if d.model == "memory":
                self.nodes[d.device_id] = dev.MemoryNodeState(d.slots)
            elif d.model == "repeater":
                self.nodes[d.device_id] = dev.RepeaterNodeState()
        self.sources = {d.device_id: dev.ScriptedMutationSource(d.script) for d in topology.devices}
        self.view = ctl.ControllerView(self.agents, poll_period=topology.poll_period)
        self.table = ctl.QcmFlowTable()
        for entry in topology.flow_entries:
            self.table = ctl.install_flow_entry(self.table, entry)
        self._next_xid = 1
        self._pending = {}
        self._segments = {}
        self._schedule_inputs()

    # -- setup

    def _schedule_inputs(self):
        q = self.queue
        topo = self.topology
        if topo.mode is Mode.POLL and self.agents:
            q.schedule(0, EventKind.POLL_TIMER, True)
        elif topo.initial_sync and self.agents:
            q.schedule(0, EventKind.POLL_TIMER, False)
        for d in sorted(self.configs):
            cfg = self.configs[d]
            for t, _, _ in cfg.script:
                q.schedule(t, EventKind.MUTATION, (d, None))
            for t, ev in cfg.node_events:
                q.schedule(t, EventKind.NODE_EVENT, (d, ev))
        for t, d, record in topo.controller_changes:
            q.schedule(t, EventKind.CONTROLLER_CHANGE, (d, record))
        for t, d in topo.packet_ins:
            q.schedule(t, EventKind.PACKET_IN, d)
        if topo.random_events and self.agents:
            rng = random.Random(self.seed)
            ids = sorted(self.agents)
            window = self.t_end if topo.random_window is None else min(self.t_end, as_time(topo.random_window))
            ticks = int(window * 4)
            times = sorted(Fraction(rng.randrange(ticks + 1), 4) for _ in range(topo.random_events))
            for t in times:
                q.schedule(t, EventKind.MUTATION, (rng.choice(ids), random_mutation(rng)))

    # -- helpers

    def _emit(self, lines):
        target = self.late_entries if self._finished else self.entries
        target.extend((self.queue.clock, line) for line in lines)

    def _send(self, msg, src, dst):
        self.queue.deliver(msg, src, dst, self.queue.clock, self.topology.channel_delay)

    def _alloc_xid(self):
        xid = self._next_xid
        self._next_xid = self._next_xid % 0xFFFFFFFF + 1
        return xid

    # -- controller behavior

    def _poll(self, device_id):
        now = self.queue.clock
        xid = self._alloc_xid()
        req = ctl.controller_poll(self.view, device_id, now, xid)
        self._pending[xid] = device_id
        self._emit(self.renderer.request(now, device_id, xid))
        self._send(encode_multipart(req), CONTROLLER, device_id)

    def _controller_receive(self, src, msg):
        now = self.queue.clock
        if isinstance(msg, ChangeNotice):
            self._poll(msg.device_id)
            return
        if isinstance(msg, PacketIn):
            actions = ctl.match_packet_in(self.table, msg.attrs)
            self._emit(self.renderer.packet_in(now, msg.device_id, actions))
            return
        m = decode_multipart(msg)
        if m.is_async:
            self.view = ctl.controller_handle_async(self.view, src, m, now)
            self._emit(self.renderer.received(now, src, m.xid, m.records[0], ctl.Origin.ASYNC))
            return
        if self._pending.get(m.xid) != src:
            raise QcmError("reply xid %d from dev %s matches no outstanding request" % (m.xid, src))
        segs = self._segments.setdefault(m.xid, [])
        segs.append(m)
        if m.more:
            return
        del self._segments[m.xid]
        del self._pending[m.xid]
        self.view = ctl.controller_handle_reply(self.view, src, segs, now)
        self._emit(self.renderer.received(now, src, m.xid, ctl.controller_query(self.view, src), ctl.Origin.POLL))

    def _controller_change(self, device_id, record):
        now = self.queue.clock
        directive = ctl.controller_request_change(self.view, device_id, record)
        self._emit(self.renderer.change_request(now, device_id, record))
        self._send(directive, CONTROLLER, device_id)
        # the agent does not echo controller changes; confirm by polling
        self._poll(device_id)

    # -- agent behavior

    def _agent_receive(self, device_id, msg):
        now = self.queue.clock
        state = self.agents[device_id]
        if isinstance(msg, ctl.ChangeDirective):
            new = ag.agent_apply_controller_change(state, msg.record, now)
            self.agents[device_id] = new
            self._emit(self.renderer.change_applied(now, device_id, diff_records(state.local_record, msg.record)))
            return
        state, replies = ag.agent_handle_request(state, msg)
        self.agents[device_id] = state
        for reply in replies:
            self._send(encode_multipart(reply), device_id, CONTROLLER)

    def _agent_mutate(self, device_id, mutations):
        now = self.queue.clock
        state = self.agents[device_id]
        new_record = dev.apply_mutations(state.local_record, mutations)
        self._emit(self.renderer.sensed(now, device_id, diff_records(state.local_record, new_record)))
        state, msg = ag.agent_on_middleware_change(state, new_record, now)
        self.agents[device_id] = state
        if msg is not None:
            self._send(encode_multipart(msg), device_id, CONTROLLER)
        if self.topology.mode is Mode.MIXED:
            self._send(ChangeNotice(device_id), device_id, CONTROLLER)

    def _node_event(self, device_id, ev):
        now = self.queue.clock
        model = self.configs[device_id].model
        self._emit(self.renderer.node_event(now, device_id, ev))
        if model == "memory":
            self.nodes[device_id], muts = dev.memory_node_step(self.nodes[device_id], ev, now)
        elif model == "repeater":
            self.nodes[device_id], muts = dev.repeater_node_step(self.nodes[device_id], ev, now)
        else:
            raise QcmError("dev %d (%s model) accepts no node events" % (device_id, model))
        if muts:
            self._agent_mutate(device_id, muts)

    # -- dispatch

    def _dispatch(self, ev):
        kind = ev.kind
        if kind is EventKind.MSG_DELIVERY:
            env = ev.payload
            if env.dst == CONTROLLER:
                self._controller_receive(env.src, env.msg)
            else:
                self._agent_receive(env.dst, env.msg)
        elif kind is EventKind.MUTATION:
            device_id, muts = ev.payload
            if muts is None:
                hit = self.sources[device_id](ev.time)
                if hit is None:
                    return
                muts = (hit,)
            self._agent_mutate(device_id, muts)
        elif kind is EventKind.NODE_EVENT:
            self._node_event(*ev.payload)
        elif kind is EventKind.CONTROLLER_CHANGE:
            self._controller_change(*ev.payload)
        elif kind is EventKind.PACKET_IN:
            d = ev.payload
            self._send(PacketIn(d, self.agents[d].local_record), d, CONTROLLER)
        elif kind is EventKind.POLL_TIMER:
            for d in sorted(self.agents):
                self._poll(d)
            nxt = ev.time + self.topology.poll_period
            if ev.payload and nxt <= self.t_end:
                self.queue.schedule(nxt, EventKind.POLL_TIMER, True)

    def _step(self, ev):
        try:
            self._dispatch(ev)
        except QcmError as exc:
            self._emit(self.renderer.error(ev.time, str(exc)))

    def run(self):
        """Execute every event due at or before ``t_end``; return the trace."""
        if self._finished:
            raise SchedulingError("simulation already ran")
        q = self.queue
        while q and q.peek().time <= self.t_end:
            self._step(q.pop())
        self._finished = True
        final = [(self.t_end, line) for line in self.renderer.final(self.t_end)]
        return Trace(tuple(self.entries) + tuple(final), self.t_end)

    def in_flight(self):
        return len(self.queue.pending(EventKind.MSG_DELIVERY))

    def quiesce(self, limit=1_000_000):
        """Deliver messages still in flight after ``t_end``.

        Only message deliveries run; timers and new inputs past the horizon
        are dropped.  Lines produced here go to ``late_entries``, not the
        trace.
        """
        if not self._finished:
            raise SchedulingError("run() first")
        q = self.queue
        for _ in range(limit):
            msgs = q.pending(EventKind.MSG_DELIVERY)
            if not msgs:
                return
            while q.peek().kind is not EventKind.MSG_DELIVERY:
                q.pop()
            self._step(q.pop())
        raise SchedulingError("messages still in flight after %d deliveries" % limit)

    def divergent_devices(self):
        return [
            d for d in sorted(self.agents)
            if ctl.controller_query(self.view, d) != self.agents[d].local_record
        ]


def run(topology, t_end, seed=0, trace_mode=TraceMode.CANONICAL):
    return Simulation(topology, t_end, seed, trace_mode).run()


def fig8_topology():
    """One scripted device re-sensing QCOM=SDC at t=0, 5 and 10."""
    script = dev.MutationScript([(t, "qcom", int(ComProtocol.SDC)) for t in (0, 5, 10)])
    return Topology(
        devices=(DeviceConfig(1, "scripted", script),),
        mode=Mode.MIXED,
        initial_sync=False,
    )
