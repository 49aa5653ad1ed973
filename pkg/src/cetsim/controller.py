"""Mode-adaptive selection: pick a feasible variant under a latency budget and accuracy floor."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Optional

from .calibration import CalibrationTable, sensing_accuracy, total_latency
from .core import (
    ALL_VARIANTS,
    CetError,
    LinkClass,
    Modality,
    Mode,
    ModeVariant,
    NodeId,
    Scenario,
    communication_load_rank,
)
from .netmodel import NoRoute, Topology
from .semantics import DEFAULT_CODECS, CodecSpec

__all__ = [
    "NoFeasibleMode",
    "LinkState",
    "SelectionRequest",
    "Candidate",
    "Selection",
    "feasible_variants",
    "select_mode",
]


class NoFeasibleMode(CetError):
    pass


@dataclass(frozen=True)
class LinkState:
    """What one terminal can reach right now."""

    cloud_reachable: bool
    edge_reachable: bool
    peers_reachable: bool
    borrowable: frozenset[Modality] = frozenset()
    peer_modalities: frozenset[Modality] = frozenset()

    @classmethod
    def from_topology(cls, topo: Topology, terminal: NodeId) -> "LinkState":
        edge_peers = topo.edge_peers(terminal)
        d2d = topo.neighbors(terminal, LinkClass.PEER_D2D)
        borrow: set[Modality] = set()
        for p in edge_peers:
            borrow |= topo.sensors(p)
        peer_mods: set[Modality] = set()
        for p in d2d:
            peer_mods |= topo.sensors(p)
        return cls(
            topo.cloud_reachable(terminal),
            topo.edge_of(terminal) is not None,
            bool(d2d),
            frozenset(borrow),
            frozenset(peer_mods),
        )


@dataclass(frozen=True)
class SelectionRequest:
    latency_budget_s: float
    min_accuracy: float
    scenario: Scenario
    snr_db: float
    local_sensors: frozenset[Modality]
    links: LinkState
    terminal: Optional[NodeId] = None

    def __post_init__(self) -> None:
        if not self.local_sensors:
            raise ValueError("local_sensors must be non-empty")
        if not (0 < self.latency_budget_s < float("inf")):
            raise ValueError("latency budget must be positive and finite")
        if not (0.0 <= self.min_accuracy <= 1.0):
            raise ValueError("min_accuracy must lie in [0, 1]")

    @classmethod
    def for_terminal(
        cls,
        topo: Topology,
        terminal: NodeId,
        *,
        latency_budget_s: float,
        min_accuracy: float,
        scenario: Scenario,
        snr_db: float,
    ) -> "SelectionRequest":
        return cls(
            latency_budget_s,
            min_accuracy,
            scenario,
            snr_db,
            topo.sensors(terminal),
            LinkState.from_topology(topo, terminal),
            terminal,
        )


def feasible_variants(req: SelectionRequest) -> list[ModeVariant]:
    """Variants the requester's link state and sensor reach allow, in canonical order."""
    out = []
    ls = req.links
    for v in ALL_VARIANTS:
        if v.mode is Mode.GFM:
            ok = ls.cloud_reachable
        elif v.mode is Mode.CRM:
            ok = ls.edge_reachable and v.modality_set <= req.local_sensors | ls.borrowable
        else:
            ok = ls.peers_reachable and v.modality_set <= req.local_sensors | ls.peer_modalities
        if ok:
            out.append(v)
    return out


@dataclass(frozen=True)
class Candidate:
    variant: ModeVariant
    accuracy: float
    total_s: float

    def sort_key(self) -> tuple:
        return (-self.accuracy, communication_load_rank(self.variant), self.total_s, self.variant.index)


@dataclass(frozen=True)
class Selection:
    variant: ModeVariant
    accuracy: float
    total_s: float
    degraded: bool
    ranking: tuple[Candidate, ...]

    def detail(self) -> str:
        """Ranking serialized for a Decision event (no commas)."""
        ranked = ";".join(f"{c.variant.to_text()}:{c.accuracy:.6f}:{c.total_s * 1e3:.4f}ms" for c in self.ranking)
        return f"selected={self.variant.to_text()};degraded={int(self.degraded)};ranking={ranked}"


def select_mode(
    req: SelectionRequest,
    topo: Topology,
    table: CalibrationTable,
    codecs: Mapping[Modality, CodecSpec] = DEFAULT_CODECS,
) -> Selection:
    """Constrained argmax of predicted clean accuracy.

    Feasible variants that fit the budget and clear the floor compete on
    accuracy, then lighter communication load, then lower latency, then
    canonical order. If the floor excludes everything the best
    budget-feasible variant is returned with ``degraded=True``.
    Raises :class:`NoFeasibleMode` when nothing fits the budget.
    """
    candidates = []
    for v in feasible_variants(req):
        try:
            lat = total_latency(v, topo, table, codecs, terminal=req.terminal)
        except NoRoute:
            continue
        if lat.total_s <= req.latency_budget_s:
            candidates.append(Candidate(v, sensing_accuracy(v, req.scenario, req.snr_db, table), lat.total_s))
    if not candidates:
        raise NoFeasibleMode(f"no feasible variant within {req.latency_budget_s * 1e3:.3f} ms")
    ranking = tuple(sorted(candidates, key=Candidate.sort_key))
    passing = [c for c in ranking if c.accuracy >= req.min_accuracy]
    best = passing[0] if passing else ranking[0]
    return Selection(best.variant, best.accuracy, best.total_s, not passing, ranking)
