"""Quantum communication metadata (QCM) over OpenFlow.

Codec for the OFPMP_QCM multipart messages, device agent and controller
state machines, a QCM flow table, abstract node models, and a
deterministic discrete-event simulator.
"""

from .agent import (
    AgentState,
    agent_apply_controller_change,
    agent_handle_request,
    agent_on_middleware_change,
    flow_module_transform,
)
from .controller import (
    Action,
    ControllerView,
    FlowMatch,
    Origin,
    QcmFlowEntry,
    QcmFlowTable,
    controller_handle_async,
    controller_handle_reply,
    controller_poll,
    controller_query,
    controller_request_change,
    install_flow_entry,
    match_packet_in,
)
from .metadata import (
    ChannelSpec,
    ComProtocol,
    EcSpec,
    QcmRecord,
    apply_field_update,
    diff_records,
    format_record,
    make_default_record,
    parse_record,
    validate_record,
)
from .sim import Mode, Simulation, Topology, Trace, TraceMode, run
from .wire import (
    Direction,
    OfpHeader,
    QcmMultipart,
    decode_header,
    decode_multipart,
    decode_stats,
    encode_header,
    encode_multipart,
    encode_stats,
    fragment,
    reassemble,
)

__version__ = "0.1.0"
