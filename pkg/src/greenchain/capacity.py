"""Network state, residual-capacity bookkeeping and the constraint validator.

The state stores *committed usage* (loads, used resources, placed VNF
instances) plus on/off flags.  Residuals are derived on demand, in two
flavours:

* ``residual_*``  gated by the on/off flag, as the constraints read;
* ``available_*`` as if the component were on, which is what candidate
  checks need: the search may switch an off component on, and its weight
  already carries that cost.

Constraint tags used in reports: C1/C2 on-off coupling, C3 eligibility,
C4 one node per chain position, C5 server resources, C6 function-node
ingress, C7 VNF ingress, C8-C10 route continuity, C11 link load.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

from .model import (FlowSpec, NetworkFunction, NetworkGraph, NfCatalog, NodeKind,
                    chain_ingress_rate, segment_rate)


class ValidationFailed(ValueError):
    def __init__(self, report: "ValidationReport"):
        super().__init__(report.to_text() or "validation failed")
        self.report = report


@dataclass
class NetworkState:
    graph: NetworkGraph = field(repr=False, compare=False)
    node_on: list
    link_on: list
    placed: set                 # {(node, nf)}: a VNF instance exists on the server
    resource_used: dict         # server -> list of used quantities per resource type
    node_ingress_load: list     # per node; traffic entering a function host
    vnf_load: dict              # (server, nf) -> ingress carried by that instance
    link_load: list

    def copy(self) -> "NetworkState":
        return NetworkState(
            self.graph,
            list(self.node_on),
            list(self.link_on),
            set(self.placed),
            {u: list(v) for u, v in self.resource_used.items()},
            list(self.node_ingress_load),
            dict(self.vnf_load),
            list(self.link_load),
        )

    # -- residuals gated by on/off state --------------------------------
    def residual_node_resources(self, u: int) -> tuple:
        node = self.graph.nodes[u]
        alpha = 1 if self.node_on[u] else 0
        return tuple(alpha * c - used for c, used in zip(node.resource_capacity, self.resource_used[u]))

    def residual_node_ingress(self, u: int) -> int:
        node = self.graph.nodes[u]
        return (node.ingress_capacity if self.node_on[u] else 0) - self.node_ingress_load[u]

    def residual_vnf_ingress(self, u: int, nf: NetworkFunction) -> int:
        return nf.processing_capacity - self.vnf_load.get((u, nf.id), 0)

    def residual_link(self, link_id: int) -> int:
        link = self.graph.links[link_id]
        beta = 1 if self.link_on[link_id] else 0
        return beta * link.usable_capacity - self.link_load[link_id]

    # -- residuals assuming the component gets switched on --------------
    def available_resources(self, u: int) -> tuple:
        node = self.graph.nodes[u]
        return tuple(c - used for c, used in zip(node.resource_capacity, self.resource_used[u]))

    def available_node_ingress(self, u: int) -> int:
        return self.graph.nodes[u].ingress_capacity - self.node_ingress_load[u]

    def available_link(self, link_id: int) -> int:
        return self.graph.links[link_id].usable_capacity - self.link_load[link_id]

    def is_placed(self, u: int, nf_id: int) -> bool:
        return (u, nf_id) in self.placed

    def on_counts(self) -> tuple:
        return sum(self.node_on), sum(self.link_on)


@dataclass(frozen=True)
class Assignment:
    """Placement and route of one flow.

    ``placements`` holds ``(position, node)`` pairs for positions 1..K and
    ``segments`` holds K+1 link-id tuples: source -> first function, between
    consecutive functions, last function -> destination.  An empty segment
    means two consecutive positions share a node.
    """

    flow: int
    placements: tuple
    segments: tuple

    def __post_init__(self):
        object.__setattr__(self, "placements", tuple((int(k), int(u)) for k, u in self.placements))
        object.__setattr__(self, "segments", tuple(tuple(int(l) for l in s) for s in self.segments))

    @property
    def nodes(self) -> tuple:
        return tuple(u for _, u in sorted(self.placements))

    def zeta(self, graph: NetworkGraph) -> tuple:
        """False where a position repeats the previous one on the same function node."""
        nodes = self.nodes
        out = []
        for i, u in enumerate(nodes):
            same = i > 0 and nodes[i - 1] == u
            out.append(not (same and graph.nodes[u].kind is NodeKind.FUNCTION_NODE))
        return tuple(out)

    def links(self) -> tuple:
        return tuple(l for seg in self.segments for l in seg)


@dataclass(frozen=True)
class Violation:
    tag: str
    ids: tuple
    detail: str = ""

    def to_line(self) -> str:
        return " ".join([self.tag, *map(str, self.ids)])


@dataclass
class ValidationReport:
    violations: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def add(self, tag: str, *ids, detail: str = "") -> None:
        self.violations.append(Violation(tag, tuple(ids), detail))

    def tags(self) -> set:
        return {v.tag for v in self.violations}

    def to_text(self) -> str:
        return "".join(v.to_line() + "\n" for v in self.violations)

    @classmethod
    def from_text(cls, text: str) -> "ValidationReport":
        report = cls()
        for line in text.splitlines():
            parts = line.split()
            if parts:
                report.add(parts[0], *(int(p) for p in parts[1:]))
        return report


def init_state(graph: NetworkGraph) -> NetworkState:
    """All controllable components off, non-SDN ones on, nothing placed."""
    return NetworkState(
        graph,
        [not n.kind.controllable for n in graph.nodes],
        [not l.is_sdn for l in graph.links],
        set(),
        {n.id: [0] * len(n.resource_capacity) for n in graph.nodes if n.kind is NodeKind.NFV_SERVER},
        [0] * graph.num_nodes,
        {},
        [0] * graph.num_links,
    )


def check_c5(state: NetworkState, node: int, nf: NetworkFunction) -> bool:
    return all(d <= r for d, r in zip(nf.resource_demand, state.available_resources(node)))


def check_c6(state: NetworkState, node: int, ingress: int, zeta: bool = True) -> bool:
    return (not zeta) or ingress <= state.available_node_ingress(node)


def check_c7(state: NetworkState, node: int, nf: NetworkFunction, ingress: int) -> bool:
    return ingress <= state.residual_vnf_ingress(node, nf)


def check_c11(state: NetworkState, link: int, additional_rate: int) -> bool:
    return additional_rate <= state.residual_link(link)


def walk_nodes(graph: NetworkGraph, start: int, links: Sequence[int]) -> Optional[list]:
    """Node sequence obtained by following ``links`` from ``start``; None if broken."""
    seq = [start]
    cur = start
    for lid in links:
        if not 0 <= lid < graph.num_links:
            return None
        link = graph.links[lid]
        if cur not in link.endpoints:
            return None
        cur = link.other(cur)
        seq.append(cur)
    return seq


def _check_structure(graph: NetworkGraph, catalog: NfCatalog, flow: FlowSpec,
                     assignment: Assignment, report: ValidationReport) -> bool:
    """C3, C4 and C8-C10 for one assignment.  Returns False if it cannot be replayed."""
    f = flow.id
    positions = sorted(k for k, _ in assignment.placements)
    if positions != list(range(1, flow.length + 1)):
        report.add("C4", f, detail=f"positions {positions} do not cover 1..{flow.length} once")
        return False
    replayable = True
    for k, u in assignment.placements:
        if not 0 <= u < graph.num_nodes or not graph.nodes[u].supports(flow.chain[k - 1]):
            report.add("C3", f, k, u, detail="node cannot run this function")
            replayable = replayable and 0 <= u < graph.num_nodes
    if len(assignment.segments) != flow.length + 1:
        report.add("C9", f, detail="wrong number of route segments")
        return False
    if not replayable:
        return False
    stops = [flow.source, *assignment.nodes, flow.destination]
    for i, seg in enumerate(assignment.segments):
        walked = walk_nodes(graph, stops[i], seg)
        tag = "C8" if i == 0 else ("C10" if i == flow.length else "C9")
        if walked is None or walked[-1] != stops[i + 1]:
            report.add(tag, f, i, detail="segment does not join consecutive stops")
            return False
    return True


def _apply(state: NetworkState, catalog: NfCatalog, flow: FlowSpec, assignment: Assignment) -> None:
    """Add the usage of ``assignment`` to ``state`` in place, switching on what it touches."""
    graph = state.graph
    nodes = assignment.nodes
    for k, u in enumerate(nodes, start=1):
        nf = catalog[flow.chain[k - 1]]
        ingress = chain_ingress_rate(flow, catalog, k)
        state.node_on[u] = True
        if graph.nodes[u].kind is NodeKind.NFV_SERVER:
            if (u, nf.id) not in state.placed:
                state.placed.add((u, nf.id))
                used = state.resource_used[u]
                for i, d in enumerate(nf.resource_demand):
                    used[i] += d
            state.vnf_load[(u, nf.id)] = state.vnf_load.get((u, nf.id), 0) + ingress
        if k == 1 or nodes[k - 2] != u:
            state.node_ingress_load[u] += ingress
    for i, seg in enumerate(assignment.segments):
        rate = segment_rate(flow, catalog, i)
        for lid in seg:
            link = graph.links[lid]
            state.link_load[lid] += rate
            state.link_on[lid] = True
            state.node_on[link.u] = True
            state.node_on[link.v] = True


def check_state(graph: NetworkGraph, catalog: NfCatalog, state: NetworkState,
                report: Optional[ValidationReport] = None) -> ValidationReport:
    """C1, C2, C5, C6, C7 and C11 over a whole state."""
    report = report if report is not None else ValidationReport()
    for link in graph.links:
        if state.link_on[link.id] and not (state.node_on[link.u] and state.node_on[link.v]):
            report.add("C1", link.id, detail="on link with an off endpoint")
        if not link.is_sdn and not state.link_on[link.id]:
            report.add("C1", link.id, detail="non-SDN link marked off")
    for node in graph.nodes:
        if not node.kind.controllable:
            if not state.node_on[node.id]:
                report.add("C2", node.id, detail="non-SDN node marked off")
            continue
        if state.node_on[node.id] and not any(state.link_on[l] for _, l in graph.incident(node.id)):
            report.add("C2", node.id, detail="on node without an on link")
    for u, nf_id in sorted(state.placed):
        if graph.nodes[u].kind is not NodeKind.NFV_SERVER:
            report.add("C3", u, nf_id, detail="VNF instance on a non-NFV node")
    for node in graph.nodes:
        u = node.id
        if node.kind is NodeKind.NFV_SERVER:
            used = [0] * len(node.resource_capacity)
            for (v, nf_id) in sorted(state.placed):
                if v == u:
                    for i, d in enumerate(catalog[nf_id].resource_demand):
                        used[i] += d
            alpha = 1 if state.node_on[u] else 0
            if any(x > alpha * c for x, c in zip(used, node.resource_capacity)):
                report.add("C5", u, detail=f"used {used} vs capacity {node.resource_capacity} (on={bool(alpha)})")
        elif node.kind is NodeKind.FUNCTION_NODE:
            cap = node.ingress_capacity if state.node_on[u] else 0
            if state.node_ingress_load[u] > cap:
                report.add("C6", u, detail=f"ingress {state.node_ingress_load[u]} > {cap}")
    for (u, nf_id), load in sorted(state.vnf_load.items()):
        if (u, nf_id) not in state.placed:
            report.add("C3", u, nf_id, detail="load on a VNF that is not instantiated")
        if load > catalog[nf_id].processing_capacity:
            report.add("C7", u, nf_id, detail=f"ingress {load} > {catalog[nf_id].processing_capacity}")
    for link in graph.links:
        beta = 1 if state.link_on[link.id] else 0
        if state.link_load[link.id] > beta * link.usable_capacity:
            report.add("C11", link.id, detail=f"load {state.link_load[link.id]} > {beta * link.usable_capacity}")
    return report


def validate_assignment(graph: NetworkGraph, catalog: NfCatalog, state: NetworkState,
                        flow: FlowSpec, assignment: Assignment) -> ValidationReport:
    """Check that committing ``assignment`` on top of ``state`` keeps C1-C11."""
    report = ValidationReport()
    if assignment.flow != flow.id:
        report.add("C4", assignment.flow, flow.id, detail="assignment/flow mismatch")
        return report
    if not _check_structure(graph, catalog, flow, assignment, report):
        return report
    trial = state.copy()
    _apply(trial, catalog, flow, assignment)
    check_state(graph, catalog, trial, report)
    return report


def commit(state: NetworkState, graph: NetworkGraph, assignment: Assignment,
           flow: FlowSpec, catalog: NfCatalog) -> NetworkState:
    """Return a new state with ``assignment`` committed; ``state`` is left untouched."""
    report = validate_assignment(graph, catalog, state, flow, assignment)
    if not report.ok:
        raise ValidationFailed(report)
    new = state.copy()
    _apply(new, catalog, flow, assignment)
    return new


def replay(graph: NetworkGraph, catalog: NfCatalog, flows: Iterable[FlowSpec],
           assignments: Iterable[Assignment], state: Optional[NetworkState] = None) -> NetworkState:
    """Apply assignments without checking; the minimal state that serves them."""
    by_id = {f.id: f for f in flows}
    out = state.copy() if state is not None else init_state(graph)
    for a in assignments:
        _apply(out, catalog, by_id[a.flow], a)
    return out


def validate_solution(graph: NetworkGraph, catalog: NfCatalog, flows: Iterable[FlowSpec],
                      assignments: Iterable[Assignment],
                      state: Optional[NetworkState] = None) -> ValidationReport:
    """Replay ``assignments`` from the all-off state and check C1-C11.

    With ``state`` given, its on/off flags and VNF instances are checked
    instead of the minimal ones implied by the replay (loads always come
    from the replay).
    """
    flows = list(flows)
    by_id = {f.id: f for f in flows}
    report = ValidationReport()
    derived = init_state(graph)
    seen = set()
    for a in assignments:
        flow = by_id.get(a.flow)
        if flow is None:
            report.add("C4", a.flow, detail="assignment for unknown flow")
            continue
        if a.flow in seen:
            report.add("C4", a.flow, detail="flow assigned twice")
        seen.add(a.flow)
        if _check_structure(graph, catalog, flow, a, report):
            _apply(derived, catalog, flow, a)
    if state is not None:
        derived.node_on = list(state.node_on)
        derived.link_on = list(state.link_on)
        for key in sorted(derived.placed - state.placed):
            report.add("C3", *key, detail="placement on a server whose VNF instance is not registered")
        derived.placed = set(state.placed) | derived.placed
    check_state(graph, catalog, derived, report)
    return report


def preplace(state: NetworkState, catalog: NfCatalog, node: int, nf_id: int) -> NetworkState:
    """Register an existing VNF instance (e.g. from an earlier time slot)."""
    graph = state.graph
    if graph.nodes[node].kind is not NodeKind.NFV_SERVER:
        raise ValueError(f"node {node} is not an NFV server")
    new = state.copy()
    if (node, nf_id) not in new.placed:
        new.placed.add((node, nf_id))
        for i, d in enumerate(catalog[nf_id].resource_demand):
            new.resource_used[node][i] += d
    new.node_on[node] = True
    peer, lid = graph.incident(node)[0]
    new.link_on[lid] = True
    new.node_on[peer] = True
    report = check_state(graph, catalog, new)
    if not report.ok:
        raise ValidationFailed(report)
    return new
