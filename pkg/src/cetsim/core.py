"""Domain types shared across the simulator.

Every type here is an immutable value with a canonical text form
(``to_text`` / ``from_text``) used in CSV output, config files and traces.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Iterable, Optional

__all__ = [
    "CetError",
    "IllegalVariant",
    "ParseError",
    "Modality",
    "Mode",
    "ModeVariant",
    "ALL_VARIANTS",
    "GFM",
    "CRM_PIC",
    "CRM_PIM",
    "CRM_PCM",
    "PIM_PI",
    "PIM_PC",
    "PIM_PM",
    "variant_modalities",
    "communication_load_rank",
    "NodeId",
    "NodeKind",
    "Node",
    "LinkClass",
    "LinkSpec",
    "Scenario",
    "ScenarioConfig",
    "SemanticFeature",
    "MessageKind",
    "Message",
    "CONTROL_FRAME_BYTES",
]


class CetError(Exception):
    """Base class for all simulator errors."""


class IllegalVariant(CetError, ValueError):
    pass


class ParseError(CetError, ValueError):
    pass


def _fmt_float(x: float) -> str:
    # repr round-trips exactly
    return repr(float(x))


def _split_fields(text: str, header: str) -> dict[str, str]:
    parts = text.split("|")
    if not parts or parts[0] != header:
        raise ParseError(f"expected header {header!r} in {text!r}")
    out: dict[str, str] = {}
    for part in parts[1:]:
        key, sep, value = part.partition("=")
        if not sep:
            raise ParseError(f"malformed field {part!r} in {text!r}")
        out[key] = value
    return out


class Modality(enum.Enum):
    """Sensing modality. Declaration order is the canonical order P < I < C < M."""

    RF_POWER = "P"
    IMAGE = "I"
    POINT_CLOUD = "C"
    MMWAVE = "M"

    @property
    def tag(self) -> str:
        return self.value

    @property
    def order(self) -> int:
        return _MODALITY_ORDER[self]

    def __lt__(self, other: "Modality") -> bool:
        if not isinstance(other, Modality):
            return NotImplemented
        return self.order < other.order

    def to_text(self) -> str:
        return self.value

    @classmethod
    def from_text(cls, text: str) -> "Modality":
        try:
            return cls(text.strip())
        except ValueError:
            raise ParseError(f"unknown modality tag {text!r}") from None


_MODALITY_ORDER = {m: i for i, m in enumerate(Modality)}


def canonical_modalities(mods: Iterable[Modality]) -> tuple[Modality, ...]:
    return tuple(sorted(set(mods), key=lambda m: m.order))


def parse_modality_set(text: str) -> frozenset[Modality]:
    """Parse ``"P,I"`` or ``"P+I"`` into a set of modalities."""
    text = text.strip()
    if not text:
        return frozenset()
    tags = text.replace("+", ",").split(",")
    return frozenset(Modality.from_text(t) for t in tags if t.strip())


class Mode(enum.Enum):
    GFM = "GFM"
    CRM = "CRM"
    PIM = "PIM"


_LEGAL_SETS = {
    Mode.GFM: {frozenset(Modality)},
    Mode.CRM: {
        frozenset({Modality.RF_POWER, Modality.IMAGE, Modality.POINT_CLOUD}),
        frozenset({Modality.RF_POWER, Modality.IMAGE, Modality.MMWAVE}),
        frozenset({Modality.RF_POWER, Modality.POINT_CLOUD, Modality.MMWAVE}),
    },
    Mode.PIM: {
        frozenset({Modality.RF_POWER, Modality.IMAGE}),
        frozenset({Modality.RF_POWER, Modality.POINT_CLOUD}),
        frozenset({Modality.RF_POWER, Modality.MMWAVE}),
    },
}


@dataclass(frozen=True)
class ModeVariant:
    """One of the seven fusion configurations.

    Construction validates the (mode, modality set) pair; anything outside
    the seven legal variants raises :class:`IllegalVariant`.
    """

    mode: Mode
    modalities: tuple[Modality, ...]

    def __post_init__(self) -> None:
        mods = canonical_modalities(self.modalities)
        if len(mods) != len(self.modalities):
            raise IllegalVariant(f"duplicate modalities in {self.modalities}")
        if frozenset(mods) not in _LEGAL_SETS[self.mode]:
            tags = "+".join(m.tag for m in mods)
            raise IllegalVariant(f"{self.mode.value}({tags}) is not a legal variant")
        object.__setattr__(self, "modalities", mods)

    @property
    def modality_set(self) -> frozenset[Modality]:
        return frozenset(self.modalities)

    @property
    def index(self) -> int:
        """Position in the canonical variant order."""
        return ALL_VARIANTS.index(self)

    def to_text(self) -> str:
        if self.mode is Mode.GFM:
            return "GFM"
        return f"{self.mode.value}({'+'.join(m.tag for m in self.modalities)})"

    @classmethod
    def from_text(cls, text: str) -> "ModeVariant":
        text = text.strip().replace(" ", "")
        if text == "GFM":
            return cls(Mode.GFM, tuple(Modality))
        head, sep, rest = text.partition("(")
        if not sep or not rest.endswith(")"):
            raise ParseError(f"malformed variant {text!r}")
        try:
            mode = Mode(head)
        except ValueError:
            raise ParseError(f"unknown mode {head!r}") from None
        mods = tuple(Modality.from_text(t) for t in rest[:-1].split("+"))
        return cls(mode, mods)

    def __str__(self) -> str:
        return self.to_text()


def _v(mode: Mode, tags: str) -> ModeVariant:
    return ModeVariant(mode, tuple(Modality(t) for t in tags))


GFM = _v(Mode.GFM, "PICM")
CRM_PIC = _v(Mode.CRM, "PIC")
CRM_PIM = _v(Mode.CRM, "PIM")
CRM_PCM = _v(Mode.CRM, "PCM")
PIM_PI = _v(Mode.PIM, "PI")
PIM_PC = _v(Mode.PIM, "PC")
PIM_PM = _v(Mode.PIM, "PM")

ALL_VARIANTS: tuple[ModeVariant, ...] = (GFM, CRM_PIC, CRM_PIM, CRM_PCM, PIM_PI, PIM_PC, PIM_PM)


def variant_modalities(v: ModeVariant) -> tuple[Modality, ...]:
    return v.modalities


_LOAD_RANK = {Mode.GFM: 3, Mode.CRM: 2, Mode.PIM: 1}


def communication_load_rank(v: ModeVariant | Mode) -> int:
    """High/Moderate/Low communication load as 3/2/1 (lower is lighter)."""
    mode = v if isinstance(v, Mode) else v.mode
    return _LOAD_RANK[mode]


NodeId = int


class NodeKind(enum.Enum):
    TERMINAL = "Terminal"
    EDGE = "Edge"
    CLOUD = "Cloud"


@dataclass(frozen=True)
class Node:
    id: NodeId
    kind: NodeKind
    sensors: frozenset[Modality] = frozenset()

    def __post_init__(self) -> None:
        if self.id < 0:
            raise ValueError("node id must be non-negative")
        object.__setattr__(self, "sensors", frozenset(self.sensors))
        if (self.kind is NodeKind.TERMINAL) != bool(self.sensors):
            raise ValueError("sensors must be non-empty iff the node is a Terminal")

    def to_text(self) -> str:
        sensors = ",".join(m.tag for m in canonical_modalities(self.sensors))
        return f"NODE v1|id={self.id}|kind={self.kind.value}|sensors={sensors}"

    @classmethod
    def from_text(cls, text: str) -> "Node":
        f = _split_fields(text, "NODE v1")
        try:
            return cls(int(f["id"]), NodeKind(f["kind"]), parse_modality_set(f["sensors"]))
        except (KeyError, ValueError) as exc:
            raise ParseError(f"bad node record {text!r}: {exc}") from None


class LinkClass(enum.Enum):
    CLOUD_UPLINK = "CloudUplink"
    EDGE_LOCAL = "EdgeLocal"
    PEER_D2D = "PeerD2D"


@dataclass(frozen=True)
class LinkSpec:
    """Point-to-point link. Links are undirected; ``endpoints`` is stored sorted."""

    endpoints: tuple[NodeId, NodeId]
    bandwidth_bits_per_s: float
    propagation_s: float
    per_hop_processing_s: float
    link_class: LinkClass
    up: bool = True

    def __post_init__(self) -> None:
        a, b = self.endpoints
        if a == b:
            raise ValueError("link endpoints must differ")
        object.__setattr__(self, "endpoints", (min(a, b), max(a, b)))
        if not (self.bandwidth_bits_per_s > 0 and self.bandwidth_bits_per_s < float("inf")):
            raise ValueError("bandwidth must be positive and finite")
        for name in ("propagation_s", "per_hop_processing_s"):
            value = getattr(self, name)
            if not (0 <= value < float("inf")):
                raise ValueError(f"{name} must be finite and >= 0")

    def other(self, node: NodeId) -> NodeId:
        a, b = self.endpoints
        if node == a:
            return b
        if node == b:
            return a
        raise ValueError(f"node {node} is not an endpoint of {self.endpoints}")

    def to_text(self) -> str:
        a, b = self.endpoints
        return (
            f"LINK v1|a={a}|b={b}|class={self.link_class.value}"
            f"|bw={_fmt_float(self.bandwidth_bits_per_s)}|prop={_fmt_float(self.propagation_s)}"
            f"|proc={_fmt_float(self.per_hop_processing_s)}|up={int(self.up)}"
        )

    @classmethod
    def from_text(cls, text: str) -> "LinkSpec":
        f = _split_fields(text, "LINK v1")
        try:
            return cls(
                (int(f["a"]), int(f["b"])),
                float(f["bw"]),
                float(f["prop"]),
                float(f["proc"]),
                LinkClass(f["class"]),
                f["up"] == "1",
            )
        except (KeyError, ValueError) as exc:
            raise ParseError(f"bad link record {text!r}: {exc}") from None


class Scenario(enum.Enum):
    DAYTIME = 31
    NIGHTTIME = 33

    @property
    def label(self) -> str:
        return self.name.capitalize()

    def to_text(self) -> str:
        return self.label

    @classmethod
    def from_text(cls, text: str) -> "Scenario":
        t = text.strip()
        for s in cls:
            if t.lower() in (s.label.lower(), str(s.value)):
                return s
        raise ParseError(f"unknown scenario {text!r}")


@dataclass(frozen=True)
class ScenarioConfig:
    scenario: Scenario
    snr_db: float
    seed: int = 0
    num_beams: int = 64

    def __post_init__(self) -> None:
        if not (-10.0 <= self.snr_db <= 30.0):
            raise ValueError(f"snr_db {self.snr_db} outside [-10, 30]")
        if self.num_beams < 2:
            raise ValueError("num_beams must be >= 2")
        if not (0 <= self.seed < 2**64):
            raise ValueError("seed must be an unsigned 64-bit integer")

    def to_text(self) -> str:
        return (
            f"SCEN v1|scenario={self.scenario.label}|snr={_fmt_float(self.snr_db)}"
            f"|seed={self.seed}|beams={self.num_beams}"
        )

    @classmethod
    def from_text(cls, text: str) -> "ScenarioConfig":
        f = _split_fields(text, "SCEN v1")
        try:
            return cls(Scenario.from_text(f["scenario"]), float(f["snr"]), int(f["seed"]), int(f["beams"]))
        except (KeyError, ValueError) as exc:
            raise ParseError(f"bad scenario record {text!r}: {exc}") from None


@dataclass(frozen=True)
class SemanticFeature:
    """A compressed sensing payload: byte size plus a scalar fidelity."""

    modality: Modality
    payload_bytes: int
    fidelity: float
    origin: NodeId
    tampered: bool = False
    watermark_valid: bool = True

    def __post_init__(self) -> None:
        if self.payload_bytes < 1:
            raise ValueError("payload_bytes must be positive")
        if not (0.0 <= self.fidelity <= 1.0):
            raise ValueError(f"fidelity {self.fidelity} outside [0, 1]")

    def to_text(self) -> str:
        return (
            f"FEAT v1|mod={self.modality.tag}|bytes={self.payload_bytes}"
            f"|fid={_fmt_float(self.fidelity)}|origin={self.origin}"
            f"|tampered={int(self.tampered)}|wm={int(self.watermark_valid)}"
        )

    @classmethod
    def from_text(cls, text: str) -> "SemanticFeature":
        f = _split_fields(text, "FEAT v1")
        try:
            return cls(
                Modality.from_text(f["mod"]),
                int(f["bytes"]),
                float(f["fid"]),
                int(f["origin"]),
                f["tampered"] == "1",
                f["wm"] == "1",
            )
        except (KeyError, ValueError) as exc:
            raise ParseError(f"bad feature record {text!r}: {exc}") from None


class MessageKind(enum.Enum):
    FEATURE_UPLOAD = "FeatureUpload"
    DIRECTIVE = "Directive"
    PEER_ALERT = "PeerAlert"
    ACK = "Ack"


# Directive/PeerAlert bodies are short canonical text carried in a fixed frame.
CONTROL_FRAME_BYTES = 2048


@dataclass(frozen=True)
class Message:
    """A unit of transmission.

    ``FeatureUpload`` carries one or more features (a terminal bundles the
    features it uploads in one round) and its size is their total payload.
    ``Directive`` and ``PeerAlert`` carry a text body padded to a fixed
    control frame of ``frame_bytes``.
    """

    kind: MessageKind
    src: NodeId
    dst: NodeId
    features: tuple[SemanticFeature, ...] = ()
    body: str = ""
    frame_bytes: int = CONTROL_FRAME_BYTES
    payload_bytes: int = field(init=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "features", tuple(self.features))
        if self.kind is MessageKind.FEATURE_UPLOAD:
            if not self.features or self.body:
                raise ValueError("FeatureUpload carries features and no body")
            size = sum(f.payload_bytes for f in self.features)
        elif self.kind in (MessageKind.DIRECTIVE, MessageKind.PEER_ALERT):
            if not self.body or self.features:
                raise ValueError(f"{self.kind.value} carries a body and no features")
            if "\n" in self.body:
                raise ValueError("message body must be single-line")
            size = len(self.body.encode())
            if size > self.frame_bytes:
                raise ValueError("body larger than the control frame")
            size = self.frame_bytes
        else:
            if self.features:
                raise ValueError("Ack carries no features")
            size = len(self.body.encode())
        object.__setattr__(self, "payload_bytes", size)

    @property
    def feature(self) -> Optional[SemanticFeature]:
        return self.features[0] if self.features else None

    def to_text(self) -> str:
        head = (
            f"MSG v1|kind={self.kind.value}|src={self.src}|dst={self.dst}"
            f"|frame={self.frame_bytes}|bytes={self.payload_bytes}"
        )
        if self.features:
            return head + "|features=" + ";".join(f.to_text() for f in self.features)
        return head + "|body=" + self.body

    @classmethod
    def from_text(cls, text: str) -> "Message":
        head, sep, tail = text.partition("|features=")
        if not sep:
            head, sep, tail = text.partition("|body=")
            if not sep:
                raise ParseError(f"message without payload field: {text!r}")
            is_body = True
        else:
            is_body = False
        f = _split_fields(head, "MSG v1")
        try:
            kind = MessageKind(f["kind"])
            feats = () if is_body else tuple(SemanticFeature.from_text(s) for s in tail.split(";"))
            msg = cls(kind, int(f["src"]), int(f["dst"]), feats, tail if is_body else "", int(f["frame"]))
        except (KeyError, ValueError) as exc:
            raise ParseError(f"bad message record {text!r}: {exc}") from None
        if msg.payload_bytes != int(f["bytes"]):
            raise ParseError("payload size does not match the serialized content")
        return msg
