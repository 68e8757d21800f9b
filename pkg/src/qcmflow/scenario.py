"""JSON scenario files.

Example::

    {
      "t_end": 15,
      "seed": 0,
      "trace_mode": "legacy-fig8",
      "controller": {"mode": "MIXED", "poll_period": 5, "initial_sync": false},
      "channel_delay": 0,
      "devices": [
        {"id": 1, "model": "scripted",
         "script": [[0, "qcom", "SDC"], [5, "qcom", "SDC"]]},
        {"id": 2, "model": "memory", "slots": 4,
         "node_events": [{"time": 3, "event": "SET_QEC", "code": 2,
                          "spec": {"n": 7, "k": 1, "d": 3}}]}
      ],
      "controller_changes": [{"time": 4, "device": 1, "record": {"qchannel": 9}}],
      "flow_entries": [{"id": 1, "priority": 10, "match": {"qcom": "SDC"},
                        "actions": [{"name": "forward", "params": {"port": 2}}]}],
      "packet_ins": [{"time": 6, "device": 1}]
    }

Field values use the same notation as the canonical record text where it
matters: QCOM accepts a protocol name, QCOM_SPEC is a hex string, and the
structured specs are objects keyed by their member names.
"""

import json
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

from . import devices as dev
from .controller import Action, FlowMatch, QcmFlowEntry
from .engine import as_time
from .errors import ConfigError, QcmError
from .metadata import FIELD_NAMES, ChannelSpec, EcSpec, QcmRecord, check_record, parse_protocol
from .sim import DeviceConfig, Mode, Topology, TraceMode

BUNDLED = {"fig8": "fig8.json"}
FIG8_GOLDEN = "fig8_legacy.trace"

_TOP_KEYS = {
    "name", "t_end", "seed", "trace_mode", "controller", "channel_delay", "devices",
    "controller_changes", "flow_entries", "packet_ins", "random_events", "random_window",
}


@dataclass(frozen=True)
class Scenario:
    topology: Topology
    t_end: object
    seed: int = 0
    trace_mode: TraceMode = TraceMode.CANONICAL
    name: str = ""


def _u(value, bits, what):
    if isinstance(value, bool) or not isinstance(value, int) or not 0 <= value < (1 << bits):
        raise ConfigError("%s must be an unsigned %d-bit integer, got %r" % (what, bits, value))
    return value


def _obj(value, allowed, what):
    if not isinstance(value, dict):
        raise ConfigError("%s must be an object" % what)
    extra = set(value) - set(allowed)
    if extra:
        raise ConfigError("%s has unknown keys: %s" % (what, ", ".join(sorted(extra))))
    return value


def channel_spec_from_json(value):
    value = _obj(value, ("wavelength_pm", "mean_photon_milli", "symbol_rate_hz"), "qchannel_spec")
    return ChannelSpec(**{k: _u(v, 32, "qchannel_spec." + k) for k, v in value.items()})


def ec_spec_from_json(value):
    value = _obj(value, ("n", "k", "d", "verify_circuit_id"), "qec_spec")
    return EcSpec(**{k: _u(v, 16, "qec_spec." + k) for k, v in value.items()})


def field_from_json(name, value):
    try:
        if name in ("qchannel", "qec"):
            return _u(value, 16, name)
        if name == "qcom":
            return _u(parse_protocol(value) if isinstance(value, str) else value, 16, name)
        if name == "qcom_spec":
            blob = bytes.fromhex(value)
            if len(blob) != 16:
                raise ConfigError("qcom_spec must be 16 bytes of hex")
            return blob
        if name == "qchannel_spec":
            return channel_spec_from_json(value)
        if name == "qec_spec":
            return ec_spec_from_json(value)
    except (TypeError, ValueError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError("bad value for %s: %s" % (name, exc)) from None
    raise ConfigError("unknown QCM field %r" % (name,))


def record_from_json(value):
    value = _obj(value, FIELD_NAMES, "record")
    try:
        return check_record(QcmRecord(**{k: field_from_json(k, v) for k, v in value.items()}))
    except QcmError as exc:
        raise ConfigError(str(exc)) from None


def node_event_from_json(value):
    if not isinstance(value, dict) or "event" not in value:
        raise ConfigError("node event must be an object with an 'event' key")
    kind = str(value["event"]).upper()
    if kind in ("READ", "WRITE", "MEASURE"):
        _obj(value, ("time", "event", "slot"), kind)
        cls = {"READ": dev.Read, "WRITE": dev.Write, "MEASURE": dev.Measure}[kind]
        return cls(_u(value.get("slot"), 32, "slot"))
    if kind == "QEC_CYCLE":
        _obj(value, ("time", "event"), kind)
        return dev.QecCycle()
    if kind == "ADVANCE_STAGE":
        _obj(value, ("time", "event"), kind)
        return dev.AdvanceStage()
    if kind == "SET_QEC":
        _obj(value, ("time", "event", "code", "spec"), kind)
        ev = dev.SetQec(_u(value.get("code"), 16, "code"), ec_spec_from_json(value.get("spec", {})))
        try:
            check_record(QcmRecord(qec=ev.code, qec_spec=ev.spec))
        except QcmError as exc:
            raise ConfigError("SET_QEC: %s" % exc) from None
        return ev
    if kind == "RETUNE":
        _obj(value, ("time", "event", "spec"), kind)
        return dev.Retune(channel_spec_from_json(value.get("spec", {})))
    raise ConfigError("unknown node event %r" % (value["event"],))


def _time(value, what):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError("%s must be a number" % what)
    try:
        return as_time(value)
    except QcmError as exc:
        raise ConfigError("%s: %s" % (what, exc)) from None


def device_from_json(value):
    value = _obj(value, ("id", "model", "script", "node_events", "initial", "slots"), "device")
    device_id = _u(value.get("id"), 32, "device id")
    model = value.get("model", "scripted")
    if model not in ("scripted", "memory", "repeater"):
        raise ConfigError("device %d: unknown model %r" % (device_id, model))
    triples = []
    for item in value.get("script", []):
        if not isinstance(item, list) or len(item) != 3:
            raise ConfigError("device %d: script entries are [time, field, value]" % device_id)
        t, name, raw = item
        triples.append((_time(t, "script time"), name, field_from_json(name, raw)))
    try:
        script = dev.MutationScript(triples)
    except QcmError as exc:
        raise ConfigError("device %d: %s" % (device_id, exc)) from None
    slots = _u(value.get("slots", 4), 32, "slots")
    node_events = []
    for item in value.get("node_events", []):
        ev = node_event_from_json(item)
        if isinstance(ev, (dev.Read, dev.Write, dev.Measure)) and ev.slot >= slots:
            raise ConfigError("device %d: slot %d out of range for %d slots" % (device_id, ev.slot, slots))
        node_events.append((_time(item.get("time"), "node event time"), ev))
    if node_events and model == "scripted":
        raise ConfigError("device %d: scripted devices take no node events" % device_id)
    initial = record_from_json(value.get("initial", {}))
    return DeviceConfig(device_id, model, script, tuple(node_events), initial, slots)


def flow_entry_from_json(value):
    value = _obj(value, ("id", "priority", "match", "actions"), "flow entry")
    match = _obj(value.get("match", {}), ("qchannel", "qcom", "qec"), "match")
    actions = []
    for a in value.get("actions", []):
        a = _obj(a, ("name", "params"), "action")
        params = a.get("params", {})
        if not isinstance(params, dict):
            raise ConfigError("action params must be an object")
        params = tuple(sorted(params.items()))
        actions.append(Action(str(a["name"]), params))
    return QcmFlowEntry(
        _u(value.get("id"), 32, "flow entry id"),
        _u(value.get("priority", 0), 16, "priority"),
        FlowMatch(**{k: field_from_json(k, v) for k, v in match.items()}),
        tuple(actions),
    )


def scenario_from_dict(data):
    data = _obj(data, _TOP_KEYS, "scenario")
    if "t_end" not in data:
        raise ConfigError("scenario needs t_end")
    ctl_cfg = _obj(data.get("controller", {}), ("mode", "poll_period", "initial_sync"), "controller")
    try:
        mode = Mode(str(ctl_cfg.get("mode", "MIXED")).upper())
        trace_mode = TraceMode(data.get("trace_mode", "canonical"))
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    devices = tuple(device_from_json(d) for d in data.get("devices", []))
    ids = {d.device_id for d in devices}

    def known(d):
        if d not in ids:
            raise ConfigError("reference to unknown device %r" % (d,))
        return d

    changes = []
    for c in data.get("controller_changes", []):
        c = _obj(c, ("time", "device", "record"), "controller change")
        changes.append((_time(c.get("time"), "change time"), known(c.get("device")), record_from_json(c.get("record", {}))))
    packet_ins = []
    for p in data.get("packet_ins", []):
        p = _obj(p, ("time", "device"), "packet-in")
        packet_ins.append((_time(p.get("time"), "packet-in time"), known(p.get("device"))))
    entries = tuple(flow_entry_from_json(e) for e in data.get("flow_entries", []))
    if len({e.entry_id for e in entries}) != len(entries):
        raise ConfigError("duplicate flow entry ids")
    topology = Topology(
        devices=devices,
        channel_delay=_time(data.get("channel_delay", 0), "channel_delay"),
        mode=mode,
        poll_period=_time(ctl_cfg.get("poll_period", 5), "poll_period"),
        initial_sync=bool(ctl_cfg.get("initial_sync", True)),
        controller_changes=tuple(changes),
        flow_entries=entries,
        packet_ins=tuple(packet_ins),
        random_events=_u(data.get("random_events", 0), 32, "random_events"),
        random_window=None if data.get("random_window") is None else _time(data["random_window"], "random_window"),
    )
    seed = data.get("seed", 0)
    if isinstance(seed, bool) or not isinstance(seed, int):
        raise ConfigError("seed must be an integer")
    return Scenario(topology, _time(data["t_end"], "t_end"), seed, trace_mode, str(data.get("name", "")))


def load_scenario(path):
    """Load a scenario file; a bare bundled name such as ``fig8`` also works."""
    p = Path(path)
    if not p.exists() and str(path) in BUNDLED:
        text = bundled_text(BUNDLED[str(path)])
    else:
        text = p.read_text()
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError("%s: invalid JSON: %s" % (path, exc)) from None
    return scenario_from_dict(data)


def bundled_text(name):
    return resources.files("qcmflow").joinpath("data", name).read_text()


def fig8_golden():
    return bundled_text(FIG8_GOLDEN)
