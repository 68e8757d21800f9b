import pytest
from hypothesis import given
import hypothesis.strategies as st

from qcmflow.devices import (
    AdvanceStage,
    Measure,
    MemoryNodeState,
    MutationScript,
    QecCycle,
    Read,
    RepeaterNodeState,
    Retune,
    ScriptedMutationSource,
    SetQec,
    Stage,
    Write,
    apply_mutations,
    memory_node_step,
    repeater_node_step,
    scripted_mutation_source,
)
from qcmflow.errors import NodeStateError, RecordValidationError
from qcmflow.metadata import ChannelSpec, ComProtocol, EcSpec, QcmRecord, validate_record

from strategies import channel_specs, nonzero_ec_specs, records

STEANE = EcSpec(7, 1, 3)


def test_memory_set_qec_mutates_qec():
    s, muts = memory_node_step(MemoryNodeState(4), SetQec(2, STEANE), 0)
    assert ("qec", 2) in muts and ("qec_spec", STEANE) in muts
    assert s.active_qec == (2, STEANE)


def test_memory_read_in_range_no_mutation():
    s, muts = memory_node_step(MemoryNodeState(4), Read(0), 0)
    assert muts == () and s.pending_requests == (Read(0),)


def test_memory_read_out_of_range():
    with pytest.raises(NodeStateError):
        memory_node_step(MemoryNodeState(4), Read(9), 0)


def test_memory_qec_cycle_services_oldest_request():
    s = MemoryNodeState(4)
    for ev in (Write(1), Measure(2)):
        s, _ = memory_node_step(s, ev, 0)
    s, muts = memory_node_step(s, QecCycle(), 1)
    assert muts == () and s.pending_requests == (Measure(2),) and s.served == 1


def test_set_qec_with_empty_code_rejected():
    with pytest.raises(RecordValidationError):
        memory_node_step(MemoryNodeState(4), SetQec(2, EcSpec()), 0)


def test_repeater_advance():
    s, muts = repeater_node_step(RepeaterNodeState(), AdvanceStage(), 0)
    assert s.stage is Stage.PURIFICATION and muts == ()


def test_repeater_retune():
    spec = ChannelSpec(wavelength_pm=1550000)
    _, muts = repeater_node_step(RepeaterNodeState(), Retune(spec), 0)
    assert muts == (("qchannel_spec", spec),)


def test_repeater_three_advances_cycle_back():
    s = RepeaterNodeState()
    seen = []
    for _ in range(3):
        s, _ = repeater_node_step(s, AdvanceStage(), 0)
        seen.append(s.stage)
    assert seen == [Stage.PURIFICATION, Stage.SWAP, Stage.IDLE]


def test_repeater_set_qec():
    _, muts = repeater_node_step(RepeaterNodeState(), SetQec(5, STEANE), 0)
    assert ("qec", 5) in muts


node_events = st.one_of(
    st.builds(Read, st.integers(0, 3)),
    st.builds(Write, st.integers(0, 3)),
    st.builds(Measure, st.integers(0, 3)),
    st.just(QecCycle()),
    st.builds(SetQec, st.integers(1, 0xFFFF), nonzero_ec_specs),
    st.just(SetQec(0, EcSpec())),
)
repeater_events = st.one_of(
    st.just(AdvanceStage()),
    st.builds(Retune, channel_specs),
    st.builds(SetQec, st.integers(1, 0xFFFF), nonzero_ec_specs),
)


@given(records(), st.lists(node_events, max_size=30))
def test_memory_mutations_keep_records_valid_and_are_deterministic(r, events):
    s = MemoryNodeState(4)
    for t, ev in enumerate(events):
        s2, muts = memory_node_step(s, ev, t)
        assert memory_node_step(s, ev, t) == (s2, muts)
        r = apply_mutations(r, muts)
        assert validate_record(r) == []
        s = s2


@given(records(), st.lists(repeater_events, max_size=30))
def test_repeater_mutations_and_stage_cycle(r, events):
    s = RepeaterNodeState()
    for t, ev in enumerate(events):
        before = s.stage
        s, muts = repeater_node_step(s, ev, t)
        r = apply_mutations(r, muts)
        assert validate_record(r) == []
        if isinstance(ev, AdvanceStage):
            assert (before, s.stage) in {
                (Stage.IDLE, Stage.PURIFICATION),
                (Stage.PURIFICATION, Stage.SWAP),
                (Stage.SWAP, Stage.IDLE),
            }
        else:
            assert s.stage is before


FIG8_SCRIPT = MutationScript([(0, "qcom", ComProtocol.SDC), (5, "qcom", ComProtocol.SDC), (10, "qcom", ComProtocol.SDC)])


def test_script_fires_at_scheduled_time():
    src = ScriptedMutationSource(FIG8_SCRIPT)
    assert scripted_mutation_source(src, 5) == ("qcom", ComProtocol.SDC)


def test_script_silent_between_entries():
    assert scripted_mutation_source(ScriptedMutationSource(FIG8_SCRIPT), 3) is None


def test_script_fires_once():
    src = ScriptedMutationSource(FIG8_SCRIPT)
    assert src(0) == ("qcom", ComProtocol.SDC)
    assert src(0) is None


def test_script_requires_increasing_times():
    with pytest.raises(NodeStateError):
        MutationScript([(1, "qcom", 1), (1, "qcom", 2)])
    with pytest.raises(NodeStateError):
        MutationScript([(1, "qpower", 1)])
