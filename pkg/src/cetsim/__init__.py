"""Discrete-event simulator for multimodal beam prediction across cloud, edge and terminal tiers."""

from .core import (
    ALL_VARIANTS,
    CRM_PCM,
    CRM_PIC,
    CRM_PIM,
    GFM,
    PIM_PC,
    PIM_PI,
    PIM_PM,
    CetError,
    IllegalVariant,
    LinkClass,
    LinkSpec,
    Message,
    MessageKind,
    Modality,
    Mode,
    ModeVariant,
    Node,
    NodeKind,
    Scenario,
    ScenarioConfig,
    SemanticFeature,
)
from .engine import Event, EventKind, Simulator, Trace, rng_stream
from .netmodel import Topology, default_topology, path_latency, route, transmit_latency
from .calibration import (
    CalibrationError,
    CalibrationTable,
    default_table,
    effective_accuracy,
    load_calibration,
    sensing_accuracy,
    total_latency,
)
from .semantics import AttackKind, AttackSpec, CodecSpec, DEFAULT_CODECS, encode, inject_attack, verify_watermark
from .protocols import DefenseSpec, ReputationState, RoundResult, run_round
from .controller import NoFeasibleMode, SelectionRequest, select_mode

__version__ = "0.1.0"

__all__ = [
    "ALL_VARIANTS",
    "CRM_PCM",
    "CRM_PIC",
    "CRM_PIM",
    "GFM",
    "PIM_PC",
    "PIM_PI",
    "PIM_PM",
    "CetError",
    "IllegalVariant",
    "LinkClass",
    "LinkSpec",
    "Message",
    "MessageKind",
    "Modality",
    "Mode",
    "ModeVariant",
    "Node",
    "NodeKind",
    "Scenario",
    "ScenarioConfig",
    "SemanticFeature",
    "CalibrationError",
    "CalibrationTable",
    "default_table",
    "effective_accuracy",
    "load_calibration",
    "sensing_accuracy",
    "total_latency",
    "Event",
    "EventKind",
    "Simulator",
    "Trace",
    "rng_stream",
    "Topology",
    "default_topology",
    "path_latency",
    "route",
    "transmit_latency",
    "AttackKind",
    "AttackSpec",
    "CodecSpec",
    "DEFAULT_CODECS",
    "encode",
    "inject_attack",
    "verify_watermark",
    "DefenseSpec",
    "ReputationState",
    "RoundResult",
    "run_round",
    "NoFeasibleMode",
    "SelectionRequest",
    "select_mode",
]
