"""Domain types for a partially-SDN, hybrid-NFV network.

Nodes, links, network functions and flows are plain frozen dataclasses with
dense integer ids.  :func:`build_graph` is the only way to obtain a
:class:`NetworkGraph`; it checks the structural invariants once so the
algorithms can index straight into tuples afterwards.
"""

from __future__ import annotations

import enum
import math
from collections import deque
from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Iterable, Iterator, Optional, Sequence


class ModelError(ValueError):
    """Base class for malformed domain objects."""


class DuplicateId(ModelError):
    pass


class DisconnectedGraph(ModelError):
    pass


class ServerDegreeViolation(ModelError):
    pass


class SdnFlagMismatch(ModelError):
    pass


class PositionOutOfRange(ModelError):
    pass


class NodeKind(enum.Enum):
    NON_SDN_SWITCH = "nonsdn"
    SDN_SWITCH = "sdn"
    NFV_SERVER = "nfv"
    FUNCTION_NODE = "pfn"

    @property
    def is_switch(self) -> bool:
        return self in (NodeKind.NON_SDN_SWITCH, NodeKind.SDN_SWITCH)

    @property
    def hosts_functions(self) -> bool:
        return self in (NodeKind.NFV_SERVER, NodeKind.FUNCTION_NODE)

    @property
    def controllable(self) -> bool:
        return self is not NodeKind.NON_SDN_SWITCH


@dataclass(frozen=True)
class Node:
    """A network node.

    ``ingress_capacity`` is the node-level ingress limit in bits/s.  It is
    mandatory for function nodes; for NFV servers it is only the load
    normaliser of the power model (``None`` drops the load term).
    """

    id: int
    kind: NodeKind
    p_max: float
    theta: float = 1.0
    ingress_capacity: Optional[int] = None
    resource_capacity: Optional[tuple] = None
    supported_nfs: Optional[frozenset] = None

    def __post_init__(self):
        if self.p_max < 0:
            raise ModelError(f"node {self.id}: p_max must be >= 0")
        if not 0.0 <= self.theta <= 1.0:
            raise ModelError(f"node {self.id}: theta must lie in [0, 1]")
        is_server = self.kind is NodeKind.NFV_SERVER
        is_pfn = self.kind is NodeKind.FUNCTION_NODE
        if (self.resource_capacity is not None) != is_server:
            raise ModelError(f"node {self.id}: resource_capacity is for NFV servers only")
        if (self.supported_nfs is not None) != is_pfn:
            raise ModelError(f"node {self.id}: supported_nfs is for function nodes only")
        if is_server:
            object.__setattr__(self, "resource_capacity", tuple(self.resource_capacity))
            if any(c < 0 for c in self.resource_capacity):
                raise ModelError(f"node {self.id}: negative resource capacity")
        if is_pfn:
            object.__setattr__(self, "supported_nfs", frozenset(self.supported_nfs))
            if not self.ingress_capacity or self.ingress_capacity <= 0:
                raise ModelError(f"node {self.id}: function node needs ingress_capacity > 0")
        if self.ingress_capacity is not None and self.ingress_capacity <= 0:
            raise ModelError(f"node {self.id}: ingress_capacity must be > 0")

    def supports(self, nf_id: int) -> bool:
        if self.kind is NodeKind.NFV_SERVER:
            return True
        if self.kind is NodeKind.FUNCTION_NODE:
            return nf_id in self.supported_nfs
        return False


@dataclass(frozen=True)
class Link:
    """Undirected link.  ``is_sdn=None`` lets :func:`build_graph` derive it."""

    id: int
    u: int
    v: int
    capacity: int
    p_max: float
    utilization: float = 1.0
    is_sdn: Optional[bool] = None

    def __post_init__(self):
        if self.u == self.v:
            raise ModelError(f"link {self.id}: self-loops are not allowed")
        if self.capacity <= 0:
            raise ModelError(f"link {self.id}: capacity must be > 0")
        if not 0.0 < self.utilization <= 1.0:
            raise ModelError(f"link {self.id}: utilization factor must lie in (0, 1]")
        if self.p_max < 0:
            raise ModelError(f"link {self.id}: p_max must be >= 0")

    @property
    def endpoints(self) -> tuple:
        return (self.u, self.v)

    def other(self, node: int) -> int:
        if node == self.u:
            return self.v
        if node == self.v:
            return self.u
        raise ValueError(f"node {node} is not an endpoint of link {self.id}")

    @property
    def usable_capacity(self) -> int:
        """floor(tau * c) in bits/s, with tau read as the decimal it was written as."""
        return math.floor(Fraction(repr(self.utilization)) * self.capacity)


@dataclass(frozen=True)
class NetworkFunction:
    id: int
    resource_demand: tuple
    processing_capacity: int
    rising_factor: float = 1.0
    name: str = ""

    def __post_init__(self):
        object.__setattr__(self, "resource_demand", tuple(self.resource_demand))
        if self.rising_factor <= 0:
            raise ModelError(f"nf {self.id}: rising factor must be > 0")
        if self.processing_capacity <= 0:
            raise ModelError(f"nf {self.id}: processing capacity must be > 0")
        if any(d < 0 for d in self.resource_demand):
            raise ModelError(f"nf {self.id}: negative resource demand")


class NfCatalog:
    """Immutable, id-indexed collection of network functions."""

    def __init__(self, functions: Iterable[NetworkFunction]):
        self._nfs = tuple(functions)
        for i, nf in enumerate(self._nfs):
            if nf.id != i:
                raise DuplicateId(f"nf ids must be dense from 0; got {nf.id} at position {i}")
        lengths = {len(nf.resource_demand) for nf in self._nfs}
        if len(lengths) > 1:
            raise ModelError("all NFs in a catalog need the same number of resource types")
        self.num_resources = lengths.pop() if lengths else 1

    def __getitem__(self, nf_id: int) -> NetworkFunction:
        return self._nfs[nf_id]

    def __len__(self) -> int:
        return len(self._nfs)

    def __iter__(self) -> Iterator[NetworkFunction]:
        return iter(self._nfs)

    def __repr__(self):
        return f"NfCatalog({list(self._nfs)!r})"

    def __eq__(self, other):
        return isinstance(other, NfCatalog) and self._nfs == other._nfs

    def __hash__(self):
        return hash(self._nfs)


@dataclass(frozen=True)
class FlowSpec:
    id: int
    source: int
    destination: int
    rate: int
    chain: tuple = field(default_factory=tuple)

    def __post_init__(self):
        object.__setattr__(self, "chain", tuple(self.chain))
        if not self.chain:
            raise ModelError(f"flow {self.id}: empty service chain")
        if self.source == self.destination:
            raise ModelError(f"flow {self.id}: source equals destination")
        if self.rate <= 0:
            raise ModelError(f"flow {self.id}: rate must be > 0")

    @property
    def length(self) -> int:
        return len(self.chain)


@dataclass(frozen=True)
class NetworkGraph:
    nodes: tuple
    links: tuple
    adjacency: tuple  # adjacency[u] -> ((neighbour, link_id), ...) sorted by neighbour

    @property
    def num_nodes(self) -> int:
        return len(self.nodes)

    @property
    def num_links(self) -> int:
        return len(self.links)

    def incident(self, node: int) -> tuple:
        return self.adjacency[node]

    def nodes_of(self, *kinds: NodeKind) -> list:
        return [n.id for n in self.nodes if n.kind in kinds]

    @property
    def function_hosts(self) -> list:
        """NFV servers and physical function nodes, in id order."""
        return [n.id for n in self.nodes if n.kind.hosts_functions]

    def min_positive_power(self) -> float:
        powers = [n.p_max for n in self.nodes if n.p_max > 0]
        powers += [l.p_max for l in self.links if l.p_max > 0]
        return min(powers) if powers else 1.0

    def validate_flow(self, flow: FlowSpec, catalog: NfCatalog) -> None:
        for endpoint in (flow.source, flow.destination):
            if not 0 <= endpoint < self.num_nodes:
                raise ModelError(f"flow {flow.id}: unknown node {endpoint}")
        for nf in flow.chain:
            if not 0 <= nf < len(catalog):
                raise ModelError(f"flow {flow.id}: chain references unknown NF {nf}")


def _sdn_flag(nodes: Sequence[Node], link: Link) -> bool:
    return (nodes[link.u].kind is not NodeKind.NON_SDN_SWITCH
            or nodes[link.v].kind is not NodeKind.NON_SDN_SWITCH)


def build_graph(nodes: Iterable[Node], links: Iterable[Link]) -> NetworkGraph:
    """Validate ``nodes``/``links`` and freeze them into a :class:`NetworkGraph`.

    Ids must be dense from 0.  Links whose ``is_sdn`` is ``None`` get the
    derived flag; an explicit flag that disagrees raises
    :class:`SdnFlagMismatch`.
    """
    nodes = list(nodes)
    links = list(links)
    for kind, items in (("node", nodes), ("link", links)):
        ids = [x.id for x in items]
        if len(set(ids)) != len(ids):
            raise DuplicateId(f"duplicate {kind} id")
        if sorted(ids) != list(range(len(ids))):
            raise DuplicateId(f"{kind} ids must be dense from 0")
    nodes.sort(key=lambda n: n.id)
    links.sort(key=lambda l: l.id)
    if not nodes:
        raise DisconnectedGraph("graph has no nodes")

    fixed = []
    seen_pairs = set()
    for link in links:
        for end in link.endpoints:
            if not 0 <= end < len(nodes):
                raise ModelError(f"link {link.id}: unknown endpoint {end}")
        pair = frozenset(link.endpoints)
        if pair in seen_pairs:
            raise ModelError(f"link {link.id}: parallel links are not supported")
        seen_pairs.add(pair)
        flag = _sdn_flag(nodes, link)
        if link.is_sdn is None:
            link = replace(link, is_sdn=flag)
        elif link.is_sdn != flag:
            raise SdnFlagMismatch(f"link {link.id}: is_sdn={link.is_sdn} but endpoints imply {flag}")
        fixed.append(link)

    adj = [[] for _ in nodes]
    for link in fixed:
        adj[link.u].append((link.v, link.id))
        adj[link.v].append((link.u, link.id))
    adjacency = tuple(tuple(sorted(a)) for a in adj)

    for node in nodes:
        if node.kind.hosts_functions:
            if len(adjacency[node.id]) != 1:
                raise ServerDegreeViolation(
                    f"node {node.id} ({node.kind.value}) has {len(adjacency[node.id])} links, needs 1")
            peer = adjacency[node.id][0][0]
            if not nodes[peer].kind.is_switch:
                raise ServerDegreeViolation(f"node {node.id} must attach to a switch")

    seen = {0}
    queue = deque([0])
    while queue:
        u = queue.popleft()
        for v, _ in adjacency[u]:
            if v not in seen:
                seen.add(v)
                queue.append(v)
    if len(seen) != len(nodes):
        raise DisconnectedGraph(f"{len(nodes) - len(seen)} node(s) unreachable from node 0")

    return NetworkGraph(tuple(nodes), tuple(fixed), adjacency)


def scaled_rate(rate: int, factors: Iterable[float]) -> int:
    """rate * prod(factors), rounded half-up to whole bits/s."""
    exact = Fraction(rate)
    for g in factors:
        exact *= Fraction(repr(float(g)))
    return math.floor(exact + Fraction(1, 2))


def chain_ingress_rate(flow: FlowSpec, catalog: NfCatalog, position: int) -> int:
    """Ingress rate of the ``position``-th (1-based) function of ``flow``."""
    if not 1 <= position <= flow.length:
        raise PositionOutOfRange(f"position {position} outside 1..{flow.length}")
    return scaled_rate(flow.rate, (catalog[nf].rising_factor for nf in flow.chain[:position - 1]))


def egress_rate(flow: FlowSpec, catalog: NfCatalog) -> int:
    """Rate leaving the last function of the chain, towards the destination."""
    return scaled_rate(flow.rate, (catalog[nf].rising_factor for nf in flow.chain))


def segment_rate(flow: FlowSpec, catalog: NfCatalog, segment: int) -> int:
    """Rate on route segment ``segment`` (0 = source -> first function)."""
    if segment == flow.length:
        return egress_rate(flow, catalog)
    return chain_ingress_rate(flow, catalog, segment + 1)
