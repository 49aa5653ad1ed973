"""Topology construction and link-level transmission timing."""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Iterable, Mapping, Optional, Sequence

from .core import (
    CetError,
    LinkClass,
    LinkSpec,
    Message,
    Modality,
    Mode,
    ModeVariant,
    Node,
    NodeId,
    NodeKind,
)

__all__ = [
    "LinkDown",
    "NoRoute",
    "TopologyError",
    "LinkDefaults",
    "DEFAULT_LINKS",
    "DEFAULT_GFM_PAYLOAD_BYTES",
    "Topology",
    "default_topology",
    "transmit_latency",
    "route",
    "path_latency",
    "gfm_uploaders",
    "crm_roles",
    "pim_roles",
]

# Smallest round payload whose 50 Mbit/s upload exceeds 300 ms.
DEFAULT_GFM_PAYLOAD_BYTES = 2_000_000


class LinkDown(CetError):
    pass


class NoRoute(CetError):
    pass


class TopologyError(CetError, ValueError):
    pass


@dataclass(frozen=True)
class LinkDefaults:
    bandwidth_bits_per_s: float
    propagation_s: float
    per_hop_processing_s: float


DEFAULT_LINKS: Mapping[LinkClass, LinkDefaults] = {
    LinkClass.CLOUD_UPLINK: LinkDefaults(50e6, 5e-3, 1e-3),
    LinkClass.EDGE_LOCAL: LinkDefaults(1e9, 0.5e-3, 1e-3),
    LinkClass.PEER_D2D: LinkDefaults(1e9, 0.1e-3, 1e-3),
}


def make_link(a: NodeId, b: NodeId, link_class: LinkClass, up: bool = True, **overrides) -> LinkSpec:
    d = DEFAULT_LINKS[link_class]
    return LinkSpec(
        (a, b),
        overrides.get("bandwidth_bits_per_s", d.bandwidth_bits_per_s),
        overrides.get("propagation_s", d.propagation_s),
        overrides.get("per_hop_processing_s", d.per_hop_processing_s),
        link_class,
        up,
    )


class Topology:
    """Nodes plus undirected links.

    Node and link values are immutable; only the ``up`` flag of a link can be
    changed, through :meth:`set_link_up`, which swaps in a new ``LinkSpec``.
    """

    def __init__(self, nodes: Iterable[Node], links: Iterable[LinkSpec]):
        self.nodes: dict[NodeId, Node] = {}
        for n in nodes:
            if n.id in self.nodes:
                raise TopologyError(f"duplicate node id {n.id}")
            self.nodes[n.id] = n
        self._links: dict[tuple[NodeId, NodeId], LinkSpec] = {}
        for link in links:
            if link.endpoints in self._links:
                raise TopologyError(f"duplicate link {link.endpoints}")
            self._links[link.endpoints] = link
        self._validate()

    def _validate(self) -> None:
        clouds = self.of_kind(NodeKind.CLOUD)
        edges = self.of_kind(NodeKind.EDGE)
        terminals = self.of_kind(NodeKind.TERMINAL)
        if len(clouds) != 1:
            raise TopologyError("topology needs exactly one Cloud node")
        if not edges:
            raise TopologyError("topology needs at least one Edge node")
        if len(terminals) < 2:
            raise TopologyError("topology needs at least two Terminals")
        for (a, b), link in self._links.items():
            if a not in self.nodes or b not in self.nodes:
                raise TopologyError(f"link {a}-{b} references an unknown node")
            kinds = {self.nodes[a].kind, self.nodes[b].kind}
            expected = {
                LinkClass.CLOUD_UPLINK: {NodeKind.EDGE, NodeKind.CLOUD},
                LinkClass.EDGE_LOCAL: {NodeKind.TERMINAL, NodeKind.EDGE},
                LinkClass.PEER_D2D: {NodeKind.TERMINAL},
            }[link.link_class]
            if kinds != expected:
                raise TopologyError(f"{link.link_class.value} link {a}-{b} joins {sorted(k.value for k in kinds)}")
        for t in terminals:
            if not any(l.link_class is LinkClass.EDGE_LOCAL for l in self.links_of(t)):
                raise TopologyError(f"terminal {t} has no EdgeLocal link")
        for e in edges:
            if not any(l.link_class is LinkClass.CLOUD_UPLINK for l in self.links_of(e)):
                raise TopologyError(f"edge {e} has no CloudUplink")

    @property
    def links(self) -> list[LinkSpec]:
        return [self._links[k] for k in sorted(self._links)]

    @property
    def cloud(self) -> NodeId:
        return self.of_kind(NodeKind.CLOUD)[0]

    def of_kind(self, kind: NodeKind) -> list[NodeId]:
        return sorted(n.id for n in self.nodes.values() if n.kind is kind)

    @property
    def terminals(self) -> list[NodeId]:
        return self.of_kind(NodeKind.TERMINAL)

    @property
    def edges(self) -> list[NodeId]:
        return self.of_kind(NodeKind.EDGE)

    def kind(self, node: NodeId) -> NodeKind:
        return self.nodes[node].kind

    def sensors(self, node: NodeId) -> frozenset[Modality]:
        return self.nodes[node].sensors

    def link(self, a: NodeId, b: NodeId) -> Optional[LinkSpec]:
        return self._links.get((min(a, b), max(a, b)))

    def links_of(self, node: NodeId) -> list[LinkSpec]:
        return [l for l in self.links if node in l.endpoints]

    def neighbors(self, node: NodeId, link_class: LinkClass, up_only: bool = True) -> list[NodeId]:
        return sorted(
            l.other(node)
            for l in self.links_of(node)
            if l.link_class is link_class and (l.up or not up_only)
        )

    def set_link_up(self, a: NodeId, b: NodeId, up: bool) -> None:
        key = (min(a, b), max(a, b))
        if key not in self._links:
            raise TopologyError(f"no link {a}-{b}")
        self._links[key] = replace(self._links[key], up=up)

    def copy(self) -> "Topology":
        return Topology(self.nodes.values(), self.links)

    def to_text(self) -> str:
        lines = [n.to_text() for n in sorted(self.nodes.values(), key=lambda n: n.id)]
        lines += [l.to_text() for l in self.links]
        return "\n".join(lines) + "\n"

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Topology):
            return NotImplemented
        return self.nodes == other.nodes and self._links == other._links

    # -- reachability used by the controller and the mode flows --

    def edge_of(self, terminal: NodeId) -> Optional[NodeId]:
        """Lowest-id edge reachable from ``terminal`` over an up EdgeLocal link."""
        edges = self.neighbors(terminal, LinkClass.EDGE_LOCAL)
        return edges[0] if edges else None

    def cloud_reachable(self, terminal: NodeId) -> bool:
        cloud = self.cloud
        return any(
            self.link(e, cloud) is not None and self.link(e, cloud).up
            for e in self.neighbors(terminal, LinkClass.EDGE_LOCAL)
        )

    def edge_peers(self, terminal: NodeId) -> list[NodeId]:
        """Other terminals sharing an up edge with ``terminal``."""
        peers: set[NodeId] = set()
        for e in self.neighbors(terminal, LinkClass.EDGE_LOCAL):
            peers.update(self.neighbors(e, LinkClass.EDGE_LOCAL))
        peers.discard(terminal)
        return sorted(peers)


def default_topology() -> Topology:
    """Cloud 0, edge 1, terminals 2..4.

    Terminals 2 and 3 carry the full sensor suite; terminal 4 is a
    camera-only unit with RF power. D2D links join 2-3 and 3-4.
    """
    P, I, C, M = Modality.RF_POWER, Modality.IMAGE, Modality.POINT_CLOUD, Modality.MMWAVE
    nodes = [
        Node(0, NodeKind.CLOUD),
        Node(1, NodeKind.EDGE),
        Node(2, NodeKind.TERMINAL, frozenset({P, I, C, M})),
        Node(3, NodeKind.TERMINAL, frozenset({P, I, C, M})),
        Node(4, NodeKind.TERMINAL, frozenset({P, I})),
    ]
    links = [
        make_link(1, 0, LinkClass.CLOUD_UPLINK),
        make_link(2, 1, LinkClass.EDGE_LOCAL),
        make_link(3, 1, LinkClass.EDGE_LOCAL),
        make_link(4, 1, LinkClass.EDGE_LOCAL),
        make_link(2, 3, LinkClass.PEER_D2D),
        make_link(3, 4, LinkClass.PEER_D2D),
    ]
    return Topology(nodes, links)


def transmit_latency(payload_bytes: int, link: LinkSpec) -> float:
    if not link.up:
        raise LinkDown(f"link {link.endpoints} is down")
    if payload_bytes < 0:
        raise ValueError("payload_bytes must be non-negative")
    return payload_bytes * 8 / link.bandwidth_bits_per_s + link.propagation_s + link.per_hop_processing_s


def path_latency(msg: Message | int, path: Sequence[LinkSpec]) -> float:
    """Store-and-forward latency: per-hop latencies add up."""
    if not path:
        raise ValueError("path must be non-empty")
    size = msg if isinstance(msg, int) else msg.payload_bytes
    return sum(transmit_latency(size, link) for link in path)


def _require(link: LinkSpec, what: str) -> LinkSpec:
    if not link.up:
        raise NoRoute(f"{what} {link.endpoints} is down")
    return link


def route(src: NodeId, dst: NodeId, mode: Mode | ModeVariant, topo: Topology) -> list[LinkSpec]:
    """Links traversed by a message of the given mode, in order.

    GFM: terminal -> edge -> cloud. CRM: terminal -> edge, edge -> terminal,
    or terminal -> edge -> terminal through one shared edge. PIM: one D2D hop.
    """
    mode = mode.mode if isinstance(mode, ModeVariant) else mode
    if src == dst:
        raise ValueError("src and dst must differ")
    if src not in topo.nodes or dst not in topo.nodes:
        raise NoRoute(f"unknown node in {src}->{dst}")
    ks, kd = topo.kind(src), topo.kind(dst)

    if mode is Mode.PIM:
        if ks is not NodeKind.TERMINAL or kd is not NodeKind.TERMINAL:
            raise NoRoute("PIM routes join two terminals")
        link = topo.link(src, dst)
        if link is None or link.link_class is not LinkClass.PEER_D2D:
            raise NoRoute(f"no PeerD2D link {src}-{dst}")
        return [_require(link, "PeerD2D link")]

    if mode is Mode.GFM:
        if ks is not NodeKind.TERMINAL or kd is not NodeKind.CLOUD:
            raise NoRoute("GFM routes run terminal -> cloud")
        for e in topo.neighbors(src, LinkClass.EDGE_LOCAL):
            uplink = topo.link(e, dst)
            if uplink is not None and uplink.up:
                return [topo.link(src, e), uplink]
        raise NoRoute(f"no live EdgeLocal + CloudUplink path from terminal {src}")

    # CRM
    if ks is NodeKind.TERMINAL and kd is NodeKind.EDGE:
        link = topo.link(src, dst)
        if link is None or link.link_class is not LinkClass.EDGE_LOCAL:
            raise NoRoute(f"no EdgeLocal link {src}-{dst}")
        return [_require(link, "EdgeLocal link")]
    if ks is NodeKind.EDGE and kd is NodeKind.TERMINAL:
        return list(reversed(route(dst, src, mode, topo)))
    if ks is NodeKind.TERMINAL and kd is NodeKind.TERMINAL:
        shared = sorted(
            set(topo.neighbors(src, LinkClass.EDGE_LOCAL)) & set(topo.neighbors(dst, LinkClass.EDGE_LOCAL))
        )
        if not shared:
            raise NoRoute(f"terminals {src} and {dst} share no reachable edge")
        e = shared[0]
        return [topo.link(src, e), topo.link(e, dst)]
    raise NoRoute(f"CRM does not route {ks.value} -> {kd.value}")


# -- role assignment for the three mode flows --


def gfm_uploaders(
    topo: Topology,
    modalities: Iterable[Modality] = tuple(Modality),
    prefer: Optional[NodeId] = None,
) -> dict[NodeId, tuple[Modality, ...]]:
    """Assign each modality to the lowest-id terminal that senses it and reaches the cloud.

    ``prefer`` is tried before the others. Raises NoRoute if some modality
    has no provider.
    """
    order = topo.terminals
    if prefer is not None:
        order = [prefer] + [t for t in order if t != prefer]
    plan: dict[NodeId, list[Modality]] = {}
    for m in sorted(modalities, key=lambda m: m.order):
        providers = [t for t in order if m in topo.sensors(t) and topo.cloud_reachable(t)]
        if not providers:
            raise NoRoute(f"no terminal can upload modality {m.tag} to the cloud")
        plan.setdefault(providers[0], []).append(m)
    return {t: tuple(mods) for t, mods in sorted(plan.items())}


def crm_roles(v: ModeVariant, topo: Topology, target: Optional[NodeId] = None) -> tuple[NodeId, NodeId, NodeId]:
    """(source, edge, target) for a CRM round.

    The target is the RF terminal whose beam is steered (it must sense P);
    the source is another terminal on a shared edge that senses the cueing
    modalities ``v - {P}``.
    """
    cue = v.modality_set - {Modality.RF_POWER}
    targets = [target] if target is not None else topo.terminals
    for t in targets:
        if Modality.RF_POWER not in topo.sensors(t):
            continue
        for s in topo.edge_peers(t):
            if cue <= topo.sensors(s):
                shared = sorted(
                    set(topo.neighbors(s, LinkClass.EDGE_LOCAL)) & set(topo.neighbors(t, LinkClass.EDGE_LOCAL))
                )
                return s, shared[0], t
    raise NoRoute(f"no source/edge/target arrangement supports {v}")


def pim_roles(v: ModeVariant, topo: Topology, decider: Optional[NodeId] = None) -> tuple[NodeId, list[NodeId]]:
    """(decider, peers) for a PIM round.

    The decider senses P, has at least one up D2D peer, and its own sensors
    together with its peers' cover ``v``.
    """
    candidates = [decider] if decider is not None else topo.terminals
    for d in candidates:
        peers = topo.neighbors(d, LinkClass.PEER_D2D)
        if not peers or Modality.RF_POWER not in topo.sensors(d):
            continue
        covered = set(topo.sensors(d))
        for p in peers:
            covered |= topo.sensors(p)
        if v.modality_set <= covered:
            return d, peers
    raise NoRoute(f"no terminal with a live peer link supports {v}")
