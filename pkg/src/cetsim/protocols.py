"""The three operation modes as event-driven agent protocols.

Each ``run_*_round`` function builds a fresh :class:`~cetsim.engine.Simulator`,
schedules the mode's message flow, lets agents react to deliveries, and
returns a :class:`RoundResult` with the accuracy, latency split and trace.
"""

from __future__ import annotations

import enum
from collections import deque
from dataclasses import dataclass, field, replace
from typing import Any, Mapping, Optional, Sequence

import numpy as np

from .calibration import (
    CalibrationTable,
    compute_cost,
    effective_accuracy,
    sensing_accuracy,
    subset_accuracy,
)
from .core import (
    GFM,
    CetError,
    Message,
    MessageKind,
    Modality,
    Mode,
    ModeVariant,
    NodeId,
    ParseError,
    ScenarioConfig,
    SemanticFeature,
    _fmt_float,
    _split_fields,
)
from .engine import Event, EventKind, Simulator, Trace
from .netmodel import NoRoute, Topology, crm_roles, gfm_uploaders, pim_roles, route, transmit_latency
from .semantics import (
    DEFAULT_CODECS,
    AttackKind,
    AttackSpec,
    CodecSpec,
    encode,
    inject_attack,
    verify_watermark,
)

__all__ = [
    "ModeInfeasible",
    "UntrustedFeature",
    "NoZoneFact",
    "Tool",
    "Agent",
    "Directive",
    "PeerAlert",
    "ReputationState",
    "DefenseSpec",
    "RoundResult",
    "default_knowledge",
    "crm_translate",
    "pim_consistency_check",
    "reputation_update",
    "run_gfm_round",
    "run_crm_round",
    "run_pim_round",
    "run_round",
]


class ModeInfeasible(CetError):
    pass


class UntrustedFeature(CetError):
    pass


class NoZoneFact(CetError, KeyError):
    pass


# -- agents --


class Tool(enum.Enum):
    ENCODE = "Encode"
    TRANSMIT = "Transmit"
    ADJUST_BEAM = "AdjustBeam"
    RAISE_ALERT = "RaiseAlert"
    VERIFY_DIRECTIVE = "VerifyDirective"
    NOOP = "NoOp"


DEFAULT_RULES: Mapping[str, Tool] = {
    "sensed": Tool.ENCODE,
    "encoded": Tool.TRANSMIT,
    "feature": Tool.TRANSMIT,
    "directive": Tool.VERIFY_DIRECTIVE,
    "directive_ok": Tool.ADJUST_BEAM,
    "detection": Tool.RAISE_ALERT,
    "alert": Tool.ADJUST_BEAM,
}

MEMORY_CAPACITY = 128


@dataclass
class Agent:
    """Knowledge base, bounded memory, rule-table reasoner and a tool set."""

    node: NodeId
    knowledge: Mapping[str, Any] = field(default_factory=dict)
    memory_capacity: int = MEMORY_CAPACITY
    rules: Mapping[str, Tool] = field(default_factory=lambda: dict(DEFAULT_RULES))
    tools: frozenset[Tool] = frozenset(Tool)
    memory: deque = field(init=False)

    def __post_init__(self) -> None:
        self.memory = deque(maxlen=self.memory_capacity)

    def perceive(self, time_s: float, percept: str, observation: Any = None) -> Tool:
        """Remember the observation and return the tool the rules pick.

        Unknown percepts, and rules naming a tool the agent lacks, give NoOp.
        """
        self.memory.append((time_s, percept, observation))
        tool = self.rules.get(percept, Tool.NOOP)
        return tool if tool in self.tools else Tool.NOOP


def default_knowledge(topo: Topology, node: NodeId) -> dict[str, Any]:
    """Zone facts for every terminal plus the shared ground-truth object position."""
    kb: dict[str, Any] = {"self": node, "object": ("vehicle", 18.5, 40.25)}
    for i, t in enumerate(topo.terminals):
        kb[f"zone:{t}"] = (12.0 + 10.0 * i, 34.0)
    return kb


# -- wire formats --


@dataclass(frozen=True)
class Directive:
    issuer: NodeId
    target_modality: Modality
    action: str
    coords: tuple[float, float]
    signature_valid: bool = True

    def __post_init__(self) -> None:
        x, y = self.coords
        if not (np.isfinite(x) and np.isfinite(y)):
            raise ValueError("directive coordinates must be finite")
        if "|" in self.action or "=" in self.action:
            raise ValueError("action must not contain '|' or '='")
        object.__setattr__(self, "coords", (float(x), float(y)))

    def to_text(self) -> str:
        x, y = self.coords
        return (
            f"DIR v1|issuer={self.issuer}|mod={self.target_modality.tag}|action={self.action}"
            f"|x={_fmt_float(x)}|y={_fmt_float(y)}|sig={int(self.signature_valid)}"
        )

    @classmethod
    def from_text(cls, text: str) -> "Directive":
        f = _split_fields(text, "DIR v1")
        try:
            if f["sig"] not in ("0", "1"):
                raise ValueError(f"bad signature flag {f['sig']!r}")
            return cls(
                int(f["issuer"]),
                Modality.from_text(f["mod"]),
                f["action"],
                (float(f["x"]), float(f["y"])),
                f["sig"] == "1",
            )
        except (KeyError, ValueError) as exc:
            raise ParseError(f"bad directive {text!r}: {exc}") from None


@dataclass(frozen=True)
class PeerAlert:
    src: NodeId
    obj: str
    coords: tuple[float, float]

    def to_text(self) -> str:
        x, y = self.coords
        return f"ALERT v1|src={self.src}|obj={self.obj}|x={_fmt_float(x)}|y={_fmt_float(y)}"

    @classmethod
    def from_text(cls, text: str) -> "PeerAlert":
        f = _split_fields(text, "ALERT v1")
        try:
            return cls(int(f["src"]), f["obj"], (float(f["x"]), float(f["y"])))
        except (KeyError, ValueError) as exc:
            raise ParseError(f"bad alert {text!r}: {exc}") from None


# -- defenses --


@dataclass(frozen=True)
class DefenseSpec:
    watermark_detection: float = 0.9
    directive_verification: float = 0.9
    consistency_detection: float = 0.8
    reputation: bool = True

    def __post_init__(self) -> None:
        for name in ("watermark_detection", "directive_verification", "consistency_detection"):
            if not (0.0 <= getattr(self, name) <= 1.0):
                raise ValueError(f"{name} must lie in [0, 1]")

    @classmethod
    def disabled(cls) -> "DefenseSpec":
        return cls(0.0, 0.0, 0.0, False)


@dataclass(frozen=True)
class ReputationState:
    weights: Mapping[NodeId, float] = field(default_factory=dict)
    decay: float = 0.8
    reward: float = 0.2
    ignore_below: float = 0.5

    def __post_init__(self) -> None:
        if not (0.0 < self.decay < 1.0 and 0.0 < self.reward < 1.0):
            raise ValueError("decay and reward must lie in (0, 1)")

    def weight(self, peer: NodeId) -> float:
        return self.weights.get(peer, 1.0)

    def trusted(self, peer: NodeId) -> bool:
        return self.weight(peer) >= self.ignore_below


def reputation_update(state: ReputationState, peer: NodeId, corroborated: bool) -> ReputationState:
    w = state.weight(peer)
    w = min(1.0, w + state.reward * (1.0 - w)) if corroborated else w * state.decay
    weights = dict(state.weights)
    weights[peer] = min(1.0, max(0.0, w))
    return replace(state, weights=weights)


def pim_consistency_check(
    alert: PeerAlert, local_observation: tuple[str, float, float], detection_prob: float, rng: np.random.Generator
) -> bool:
    """Cross-check a peer alert against the receiver's own observation.

    Alerts that agree with the local observation always pass; others fail
    with probability ``detection_prob``. One uniform draw per call.
    """
    if not (0.0 <= detection_prob <= 1.0):
        raise ValueError("detection_prob must lie in [0, 1]")
    draw = rng.random()
    obj, x, y = local_observation
    if alert.obj == obj and alert.coords == (x, y):
        return True
    return not draw < detection_prob


def crm_translate(feature: SemanticFeature, knowledge: Mapping[str, Any]) -> Directive:
    """Turn a cueing feature into a focus directive for the feature's zone."""
    if not feature.watermark_valid:
        raise UntrustedFeature(f"feature from node {feature.origin} failed its integrity mark")
    try:
        x, y = knowledge[f"zone:{feature.origin}"]
    except KeyError:
        raise NoZoneFact(f"no zone fact for node {feature.origin}") from None
    return Directive(int(knowledge.get("self", -1)), Modality.MMWAVE, "focus", (x, y))


# -- round plumbing --


@dataclass
class RoundResult:
    variant: ModeVariant
    accuracy: float
    clean_accuracy: float
    inference_s: float
    transmission_s: float
    total_s: float
    bytes_tx: int
    attacks_hit: int
    defenses_hit: int
    trace: Trace
    fallback: Optional[ModeVariant] = None
    reputation: Optional[ReputationState] = None

    @property
    def mode(self) -> Mode:
        return self.variant.mode


def _attack(attacks: Sequence[AttackSpec], kind: AttackKind) -> Optional[AttackSpec]:
    for a in attacks:
        if a.kind is kind:
            return a
    return None


class _Round:
    """Mutable bookkeeping shared by the callbacks of one round."""

    def __init__(self, topo: Topology, seed: int):
        self.topo = topo
        self.sim = Simulator(seed)
        self.bytes_tx = 0
        self.attacks_hit = 0
        self.defenses_hit = 0
        self.agents: dict[NodeId, Agent] = {}

    def agent(self, node: NodeId) -> Agent:
        if node not in self.agents:
            self.agents[node] = Agent(node, default_knowledge(self.topo, node))
        return self.agents[node]

    def send(self, msg: Message, path, t0: float, on_delivered) -> None:
        """Store-and-forward ``msg`` along ``path``; call ``on_delivered(sim, ev)`` at the end."""
        hops = []
        node = msg.src
        for link in path:
            nxt = link.other(node)
            hops.append((node, nxt, link))
            node = nxt

        def start_hop(i: int, t: float) -> None:
            a, b, link = hops[i]
            detail = f"msg={msg.kind.value};link={link.link_class.value};src={a};dst={b};bytes={msg.payload_bytes}"
            self.bytes_tx += msg.payload_bytes
            self.sim.schedule(t, EventKind.TRANSMIT_START, a, detail)
            last = i == len(hops) - 1

            def delivered(sim: Simulator, ev: Event) -> None:
                if last:
                    on_delivered(sim, ev)
                else:
                    start_hop(i + 1, sim.now)

            self.sim.schedule(t + transmit_latency(msg.payload_bytes, link), EventKind.DELIVERED, b, detail, delivered)

        start_hop(0, t0)

    def note_attack(self, t: float, node: NodeId, detail: str) -> None:
        self.attacks_hit += 1
        self.sim.schedule(t, EventKind.ATTACK_INJECTED, node, detail)

    def note_defense(self, node: NodeId, detail: str) -> None:
        self.defenses_hit += 1
        self.sim.schedule(self.sim.now, EventKind.DEFENSE_TRIGGERED, node, detail)


def _decision_detail(v: ModeVariant, acc: float, fallback: Optional[ModeVariant] = None) -> str:
    fb = fallback.to_text() if fallback is not None else "none"
    return f"variant={v.to_text()};accuracy={acc!r};fallback={fb}"


# -- GFM --


def run_gfm_round(
    topo: Topology,
    table: CalibrationTable,
    codecs: Mapping[Modality, CodecSpec] = DEFAULT_CODECS,
    attacks: Sequence[AttackSpec] = (),
    rng: Optional[np.random.Generator] = None,
    *,
    config: ScenarioConfig,
    defenses: DefenseSpec = DefenseSpec(),
) -> RoundResult:
    """Centralized fusion: terminals upload features through the edge to the cloud."""
    rng = rng if rng is not None else np.random.default_rng(config.seed)
    try:
        plan = gfm_uploaders(topo)
    except NoRoute as exc:
        raise ModeInfeasible(f"GFM: {exc}") from None
    r = _Round(topo, config.seed)
    cloud = topo.cloud
    tamper = _attack(attacks, AttackKind.SEMANTIC_TAMPER)
    accepted: list[SemanticFeature] = []
    pending = [len(plan)]
    inference = compute_cost(GFM, table).inference_s
    clean = sensing_accuracy(GFM, config.scenario, config.snr_db, table)
    outcome: dict[str, float] = {}

    def fuse(sim: Simulator, ev: Event) -> None:
        have = {f.modality for f in accepted}
        if have == GFM.modality_set:
            base = clean
        else:
            base = subset_accuracy(have, config.scenario, config.snr_db, table)[1]
        acc = effective_accuracy(base, accepted, table.chance) if have else table.chance
        outcome["accuracy"] = acc
        sim.schedule(sim.now, EventKind.DECISION, cloud, _decision_detail(GFM, acc))

    def cloud_receive(sim: Simulator, ev: Event, msg: Message) -> None:
        agent = r.agent(cloud)
        agent.perceive(sim.now, "feature", msg.src)
        for f in msg.features:
            if verify_watermark(f, defenses.watermark_detection, rng):
                accepted.append(f)
            else:
                r.note_defense(cloud, f"defense=watermark;mod={f.modality.tag};origin={f.origin}")
        pending[0] -= 1
        if pending[0] == 0:
            sim.schedule(sim.now + inference, EventKind.COMPUTE_DONE, cloud, "task=fusion;variant=GFM", fuse)

    for t, mods in plan.items():
        agent = r.agent(t)
        agent.perceive(0.0, "sensed", mods)
        feats = []
        for m in mods:
            f = encode(m, codecs[m], t)
            if tamper is not None:
                hit = inject_attack(f, tamper, rng)
                if hit is not f:
                    r.note_attack(0.0, t, f"attack=SemanticTamper;mod={m.tag}")
                f = hit
            feats.append(f)
        agent.perceive(0.0, "encoded", len(feats))
        msg = Message(MessageKind.FEATURE_UPLOAD, t, cloud, tuple(feats))
        r.send(msg, route(t, cloud, Mode.GFM, topo), 0.0, lambda sim, ev, msg=msg: cloud_receive(sim, ev, msg))

    trace = r.sim.run()
    deliveries = [e.time_s for e in trace.of_kind(EventKind.DELIVERED) if e.node == cloud]
    transmission = max(deliveries)
    return RoundResult(
        GFM,
        outcome["accuracy"],
        clean,
        inference,
        transmission,
        transmission + inference,
        r.bytes_tx,
        r.attacks_hit,
        r.defenses_hit,
        trace,
    )


# -- CRM --


def _pim_fallback(node: NodeId, topo: Topology, table: CalibrationTable, config: ScenarioConfig, codecs) -> tuple[Optional[ModeVariant], float, float]:
    """Best PIM variant a terminal can run on its own sensors: (variant, accuracy, inference_s)."""
    best: tuple[Optional[ModeVariant], float, float] = (None, table.chance, 0.0)
    for v in (x for x in table.costs if x.mode is Mode.PIM):
        if v.modality_set <= topo.sensors(node):
            acc = effective_accuracy(
                sensing_accuracy(v, config.scenario, config.snr_db, table),
                [codecs[m].base_fidelity for m in v.modalities],
                table.chance,
            )
            if best[0] is None or acc > best[1] or (acc == best[1] and v.index < best[0].index):
                best = (v, acc, compute_cost(v, table).inference_s)
    return best


def run_crm_round(
    topo: Topology,
    table: CalibrationTable,
    codecs: Mapping[Modality, CodecSpec] = DEFAULT_CODECS,
    attacks: Sequence[AttackSpec] = (),
    rng: Optional[np.random.Generator] = None,
    *,
    config: ScenarioConfig,
    variant: ModeVariant,
    defenses: DefenseSpec = DefenseSpec(),
) -> RoundResult:
    """Sense-and-guide: a cueing terminal's features become a directive for the RF terminal."""
    if variant.mode is not Mode.CRM:
        raise ValueError(f"{variant} is not a CRM variant")
    rng = rng if rng is not None else np.random.default_rng(config.seed)
    try:
        source, edge, target = crm_roles(variant, topo)
    except NoRoute as exc:
        raise ModeInfeasible(f"CRM: {exc}") from None
    r = _Round(topo, config.seed)
    tamper = _attack(attacks, AttackKind.SEMANTIC_TAMPER)
    relay = _attack(attacks, AttackKind.MALICIOUS_RELAY)
    clean = sensing_accuracy(variant, config.scenario, config.snr_db, table)
    inference = compute_cost(variant, table).inference_s
    outcome: dict[str, Any] = {"fallback": None}
    feats: list[SemanticFeature] = []
    timings: dict[str, float] = {}

    def fall_back(sim: Simulator) -> None:
        fb, acc, fb_inference = _pim_fallback(source, topo, table, config, codecs)
        outcome["fallback"] = fb
        outcome["inference"] = fb_inference
        label = fb.to_text() if fb is not None else "none"

        def decide(sim: Simulator, ev: Event) -> None:
            outcome["accuracy"] = acc
            sim.schedule(sim.now, EventKind.DECISION, source, _decision_detail(variant, acc, fb))

        sim.schedule(sim.now + fb_inference, EventKind.COMPUTE_DONE, source, f"task=fallback;variant={label}", decide)

    def target_receive(sim: Simulator, ev: Event, msg: Message) -> None:
        timings["directive"] = sim.now
        agent = r.agent(target)
        tool = agent.perceive(sim.now, "directive", msg.body)
        directive = Directive.from_text(msg.body)
        corrupted = msg.body != outcome["sent_body"]
        if tool is Tool.VERIFY_DIRECTIVE:
            draw = rng.random()
            if not directive.signature_valid and draw < defenses.directive_verification:
                r.note_defense(target, f"defense=directive-verification;issuer={directive.issuer}")
                fall_back(sim)
                return
        agent.perceive(sim.now, "directive_ok", directive.coords)
        local_p = encode(Modality.RF_POWER, codecs[Modality.RF_POWER], target)
        acc = effective_accuracy(clean, feats + [local_p], table.chance)
        if corrupted:
            acc = table.chance + (acc - table.chance) * relay.severity

        def decide(sim: Simulator, ev: Event) -> None:
            outcome["accuracy"] = acc
            sim.schedule(sim.now, EventKind.DECISION, target, _decision_detail(variant, acc))

        sim.schedule(
            sim.now + inference,
            EventKind.COMPUTE_DONE,
            target,
            f"task=AdjustBeam;variant={variant.to_text()}",
            decide,
        )

    def edge_receive(sim: Simulator, ev: Event, msg: Message) -> None:
        timings["feature"] = sim.now
        agent = r.agent(edge)
        agent.perceive(sim.now, "feature", msg.src)
        for f in msg.features:
            if not verify_watermark(f, defenses.watermark_detection, rng):
                r.note_defense(edge, f"defense=watermark;mod={f.modality.tag};origin={f.origin}")
                fall_back(sim)
                return
            # a missed detection means the edge sees an intact mark
            feats.append(replace(f, watermark_valid=True))
        directive = crm_translate(feats[0], agent.knowledge)
        out = Message(MessageKind.DIRECTIVE, edge, target, body=directive.to_text())
        outcome["sent_body"] = out.body
        if relay is not None:
            hit = inject_attack(out, relay, rng)
            if hit is not out:
                r.note_attack(sim.now, edge, "attack=MaliciousRelay")
            out = hit
        r.send(out, route(edge, target, Mode.CRM, topo), sim.now, lambda s, e, m=out: target_receive(s, e, m))

    agent = r.agent(source)
    cue = tuple(m for m in variant.modalities if m is not Modality.RF_POWER)
    agent.perceive(0.0, "sensed", cue)
    upload = []
    for m in cue:
        f = encode(m, codecs[m], source)
        if tamper is not None:
            hit = inject_attack(f, tamper, rng)
            if hit is not f:
                r.note_attack(0.0, source, f"attack=SemanticTamper;mod={m.tag}")
            f = hit
        upload.append(f)
    agent.perceive(0.0, "encoded", len(upload))
    msg = Message(MessageKind.FEATURE_UPLOAD, source, edge, tuple(upload))
    r.send(msg, route(source, edge, Mode.CRM, topo), 0.0, lambda s, e: edge_receive(s, e, msg))

    trace = r.sim.run()
    transmission = timings.get("directive", timings["feature"])
    used_inference = outcome.get("inference", inference)
    return RoundResult(
        variant,
        outcome["accuracy"],
        clean,
        used_inference,
        transmission,
        transmission + used_inference,
        r.bytes_tx,
        r.attacks_hit,
        r.defenses_hit,
        trace,
        fallback=outcome["fallback"],
    )


# -- PIM --


def run_pim_round(
    topo: Topology,
    table: CalibrationTable,
    codecs: Mapping[Modality, CodecSpec] = DEFAULT_CODECS,
    attacks: Sequence[AttackSpec] = (),
    rng: Optional[np.random.Generator] = None,
    *,
    config: ScenarioConfig,
    variant: ModeVariant,
    defenses: DefenseSpec = DefenseSpec(),
    reputation: Optional[ReputationState] = None,
) -> RoundResult:
    """Peer interaction: local inference plus one-hop semantic alerts from D2D peers."""
    if variant.mode is not Mode.PIM:
        raise ValueError(f"{variant} is not a PIM variant")
    rng = rng if rng is not None else np.random.default_rng(config.seed)
    try:
        decider, peers = pim_roles(variant, topo)
    except NoRoute as exc:
        raise ModeInfeasible(f"PIM: {exc}") from None
    r = _Round(topo, config.seed)
    mislead = _attack(attacks, AttackKind.CROSS_MODAL_MISLEAD)
    rep = [reputation if reputation is not None else ReputationState()]
    clean = sensing_accuracy(variant, config.scenario, config.snr_db, table)
    inference = compute_cost(variant, table).inference_s
    local = [encode(m, codecs[m], decider) for m in variant.modalities]
    margin = [effective_accuracy(clean, local, table.chance) - table.chance]
    outcome: dict[str, float] = {}
    pending = [len(peers)]
    observation = r.agent(decider).knowledge["object"]

    def decide(sim: Simulator, ev: Event) -> None:
        acc = table.chance + margin[0]
        outcome["accuracy"] = acc
        sim.schedule(sim.now, EventKind.DECISION, decider, _decision_detail(variant, acc))

    def decider_receive(sim: Simulator, ev: Event, msg: Message) -> None:
        agent = r.agent(decider)
        agent.perceive(sim.now, "alert", msg.body)
        alert = PeerAlert.from_text(msg.body)
        trusted = rep[0].trusted(alert.src) if defenses.reputation else True
        passed = pim_consistency_check(alert, observation, defenses.consistency_detection, rng)
        if defenses.reputation:
            rep[0] = reputation_update(rep[0], alert.src, passed)
        if not passed:
            r.note_defense(decider, f"defense=consistency;peer={alert.src}")
        elif not trusted:
            r.note_defense(decider, f"defense=reputation;peer={alert.src}")
        elif (alert.obj, *alert.coords) != tuple(observation):
            margin[0] *= mislead.severity if mislead is not None else 1.0
        pending[0] -= 1
        if pending[0] == 0:
            sim.schedule(sim.now, EventKind.COMPUTE_DONE, decider, f"task=fusion;variant={variant.to_text()}", decide)

    r.agent(decider).perceive(0.0, "sensed", variant.modalities)
    r.sim.schedule(inference, EventKind.COMPUTE_DONE, decider, f"task=local;variant={variant.to_text()}")
    for p in peers:
        agent = r.agent(p)
        obj, x, y = agent.knowledge["object"]
        tool = agent.perceive(inference, "detection", obj)
        if tool is not Tool.RAISE_ALERT:
            continue
        msg = Message(MessageKind.PEER_ALERT, p, decider, body=PeerAlert(p, obj, (x, y)).to_text())
        if mislead is not None:
            hit = inject_attack(msg, mislead, rng)
            if hit is not msg:
                r.note_attack(inference, p, "attack=CrossModalMislead")
            msg = hit
        r.send(msg, route(p, decider, Mode.PIM, topo), inference, lambda s, e, m=msg: decider_receive(s, e, m))

    trace = r.sim.run()
    transmission = max(e.time_s for e in trace.of_kind(EventKind.DELIVERED)) - inference
    return RoundResult(
        variant,
        outcome["accuracy"],
        clean,
        inference,
        transmission,
        inference + transmission,
        r.bytes_tx,
        r.attacks_hit,
        r.defenses_hit,
        trace,
        reputation=rep[0],
    )


def run_round(
    variant: ModeVariant,
    topo: Topology,
    table: CalibrationTable,
    codecs: Mapping[Modality, CodecSpec] = DEFAULT_CODECS,
    attacks: Sequence[AttackSpec] = (),
    rng: Optional[np.random.Generator] = None,
    *,
    config: ScenarioConfig,
    defenses: DefenseSpec = DefenseSpec(),
    reputation: Optional[ReputationState] = None,
) -> RoundResult:
    """Dispatch to the round function for ``variant``'s mode."""
    if variant.mode is Mode.GFM:
        return run_gfm_round(topo, table, codecs, attacks, rng, config=config, defenses=defenses)
    if variant.mode is Mode.CRM:
        return run_crm_round(topo, table, codecs, attacks, rng, config=config, variant=variant, defenses=defenses)
    return run_pim_round(
        topo, table, codecs, attacks, rng, config=config, variant=variant, defenses=defenses, reputation=reputation
    )
