"""Beam search over the stage graph of a service chain (modified Viterbi).

Stage 0 is the flow source, stage k (1..K) holds the nodes able to run the
k-th function, stage K+1 is the destination.  Every pair of nodes in
consecutive stages is joined by one MDRA route.  Each candidate node keeps
the ``width`` cheapest partial paths reaching it; every partial path
carries its own capacity bookkeeping so that a path which reuses a server,
a function node or a link is charged consistently.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Optional

from .capacity import (Assignment, NetworkState, check_c5, check_c6, check_c7, commit,
                       init_state)
from .mdra import EdgeFinder, RoutedEdge
from .model import (FlowSpec, NetworkGraph, NfCatalog, NodeKind, chain_ingress_rate,
                    segment_rate)
from .power import PowerMode, WeightParams, Weights, assign_weights, total_power

log = logging.getLogger(__name__)


class FlowRejected(RuntimeError):
    def __init__(self, flow: int, stage: int, reason: str):
        super().__init__(f"flow {flow} rejected at stage {stage}: {reason}")
        self.flow = flow
        self.stage = stage
        self.reason = reason


class EmptyCandidateSet(FlowRejected):
    pass


class NoExtension(FlowRejected):
    pass


@dataclass(frozen=True)
class BeamConfig:
    width: int = 1

    def __post_init__(self):
        if self.width < 1:
            raise ValueError("beam width must be >= 1")


@dataclass
class StagePath:
    """A partial source -> stage-k path with its private capacity deltas."""

    flow: int
    stage: int
    terminal: int
    placements: tuple = ()
    segments: tuple = ()
    walk: tuple = ()
    weight: float = 0.0
    resource_used: dict = field(default_factory=dict)   # server -> list of extra usage
    fresh: frozenset = frozenset()                      # (server, nf) instantiated on this path
    vnf_used: dict = field(default_factory=dict)        # (server, nf) -> extra ingress
    ingress_used: dict = field(default_factory=dict)    # function node -> extra ingress
    link_used: dict = field(default_factory=dict)       # link -> extra load

    def sort_key(self) -> tuple:
        return (self.weight, self.walk, tuple(u for _, u in self.placements))

    def path_residuals(self, state: NetworkState, server: int) -> tuple:
        """Resource residual of ``server`` as seen by this path."""
        extra = self.resource_used.get(server)
        avail = state.available_resources(server)
        if extra is None:
            return avail
        return tuple(a - e for a, e in zip(avail, extra))


@dataclass
class FlowResult:
    flow: int
    assignment: Optional[Assignment]
    weight: Optional[float]
    mdra_calls: int
    rejected_stage: Optional[int] = None
    reason: str = ""

    @property
    def served(self) -> bool:
        return self.assignment is not None


@dataclass
class SolveResult:
    outcomes: list
    state: NetworkState
    objective_power: float
    total_power: float

    @property
    def assignments(self) -> list:
        return [o.assignment for o in self.outcomes if o.assignment is not None]


def candidate_set(graph: NetworkGraph, state: NetworkState, flow: FlowSpec,
                  catalog: NfCatalog, stage: int) -> list:
    """Nodes able to run the ``stage``-th function of ``flow`` given committed state."""
    nf = catalog[flow.chain[stage - 1]]
    ingress = chain_ingress_rate(flow, catalog, stage)
    prev_nf = flow.chain[stage - 2] if stage > 1 else None
    out = []
    for node in graph.nodes:
        u = node.id
        if node.kind is NodeKind.FUNCTION_NODE:
            if not node.supports(nf.id):
                continue
            # a run continuing on the same node adds no ingress
            may_continue = prev_nf is not None and node.supports(prev_nf)
            if check_c6(state, u, ingress, zeta=not may_continue):
                out.append(u)
        elif node.kind is NodeKind.NFV_SERVER:
            if state.is_placed(u, nf.id):
                if check_c7(state, u, nf, ingress):
                    out.append(u)
            elif check_c5(state, u, nf) and ingress <= nf.processing_capacity:
                out.append(u)
    if not out:
        raise EmptyCandidateSet(flow.id, stage, f"no node can run nf {nf.id}")
    return out


def _extend(beam: StagePath, edge: RoutedEdge, rate: int, target: int, stage: int,
            state: NetworkState, graph: NetworkGraph, flow: FlowSpec,
            catalog: NfCatalog) -> Optional[StagePath]:
    """``beam`` followed by ``edge`` (and a placement at ``target`` unless final), or None."""
    link_used = beam.link_used
    if edge.path:
        link_used = dict(link_used)
        for lid in edge.path:
            extra = link_used.get(lid, 0) + rate
            if extra > state.available_link(lid):
                return None
            link_used[lid] = extra

    resource_used = beam.resource_used
    fresh = beam.fresh
    vnf_used = beam.vnf_used
    ingress_used = beam.ingress_used
    placements = beam.placements
    final = stage == flow.length + 1
    if not final:
        nf = catalog[flow.chain[stage - 1]]
        ingress = chain_ingress_rate(flow, catalog, stage)
        node = graph.nodes[target]
        same_node = stage > 1 and beam.terminal == target
        if node.kind is NodeKind.FUNCTION_NODE:
            if not same_node:
                extra = ingress_used.get(target, 0) + ingress
                if extra > state.available_node_ingress(target):
                    return None
                ingress_used = {**ingress_used, target: extra}
        else:
            key = (target, nf.id)
            if state.is_placed(*key) or key in fresh:
                if ingress + vnf_used.get(key, 0) > state.residual_vnf_ingress(target, nf):
                    return None
            else:
                residual = beam.path_residuals(state, target)
                if any(d > r for d, r in zip(nf.resource_demand, residual)):
                    return None
                if ingress > nf.processing_capacity:
                    return None
                base = resource_used.get(target, [0] * len(nf.resource_demand))
                resource_used = {**resource_used,
                                 target: [b + d for b, d in zip(base, nf.resource_demand)]}
                fresh = fresh | {key}
            vnf_used = {**vnf_used, key: vnf_used.get(key, 0) + ingress}
        placements = placements + ((stage, target),)

    return StagePath(
        flow=beam.flow,
        stage=stage,
        terminal=target,
        placements=placements,
        segments=beam.segments + (edge.path,),
        walk=beam.walk + edge.nodes[1:],
        weight=beam.weight + edge.weight,
        resource_used=resource_used,
        fresh=fresh,
        vnf_used=vnf_used,
        ingress_used=ingress_used,
        link_used=link_used,
    )


def extend_stage(beams: dict, candidates: list, flow: FlowSpec, graph: NetworkGraph,
                 state: NetworkState, catalog: NfCatalog, config: BeamConfig,
                 finder: EdgeFinder, stage: int) -> dict:
    """Advance every stored path to ``candidates``; keep ``config.width`` per candidate.

    ``beams`` maps terminal node -> stored paths.  With ``stage`` equal to
    K+1 the single candidate is the destination and nothing is truncated.
    """
    rate = segment_rate(flow, catalog, stage - 1)
    final = stage == flow.length + 1
    out = {}
    for v in candidates:
        pool = []
        for u in sorted(beams):
            edge = finder.edge(u, v, rate)
            if edge is None:
                continue
            for beam in beams[u]:
                ext = _extend(beam, edge, rate, v, stage, state, graph, flow, catalog)
                if ext is not None:
                    pool.append(ext)
        if not pool:
            continue
        pool.sort(key=StagePath.sort_key)
        out[v] = pool if final else pool[:config.width]
    if not out:
        raise NoExtension(flow.id, stage, "no stored path can reach any candidate")
    return out


def search(graph: NetworkGraph, state: NetworkState, flow: FlowSpec, catalog: NfCatalog,
           config: BeamConfig, weights: Weights, trace: Optional[dict] = None) -> tuple:
    """Run the stage search without committing.  Returns (best StagePath, mdra call count).

    ``trace``, when given, receives the stored paths of every stage.
    """
    graph.validate_flow(flow, catalog)
    finder = EdgeFinder(graph, state, weights)
    beams = {flow.source: [StagePath(flow.id, 0, flow.source, walk=(flow.source,))]}
    try:
        for k in range(1, flow.length + 1):
            cands = candidate_set(graph, state, flow, catalog, k)
            beams = extend_stage(beams, cands, flow, graph, state, catalog, config, finder, k)
            if trace is not None:
                trace[k] = beams
        final = extend_stage(beams, [flow.destination], flow, graph, state, catalog, config,
                             finder, flow.length + 1)
    except FlowRejected as exc:
        exc.mdra_calls = finder.calls
        raise
    if trace is not None:
        trace[flow.length + 1] = final
    return final[flow.destination][0], finder.calls


def to_assignment(path: StagePath) -> Assignment:
    return Assignment(path.flow, path.placements, path.segments)


def mva_solve(graph: NetworkGraph, state: NetworkState, flow: FlowSpec, catalog: NfCatalog,
              config: BeamConfig = BeamConfig(), params: Optional[WeightParams] = None,
              weights: Optional[Weights] = None) -> tuple:
    """Place and route one flow and commit it.

    Returns ``(assignment, new_state, selected_weight, mdra_calls)``.
    Raises :class:`FlowRejected` if some stage has no usable node.
    """
    if weights is None:
        weights = assign_weights(graph, state, flow, params)
    best, calls = search(graph, state, flow, catalog, config, weights)
    assignment = to_assignment(best)
    new_state = commit(state, graph, assignment, flow, catalog)
    return assignment, new_state, best.weight, calls


def solve_all(graph: NetworkGraph, flows, catalog: NfCatalog, config: BeamConfig = BeamConfig(),
              params: Optional[WeightParams] = None,
              state: Optional[NetworkState] = None) -> SolveResult:
    """Serve ``flows`` one after another, re-deriving weights from the evolving state."""
    params = params or WeightParams.for_graph(graph)
    state = state if state is not None else init_state(graph)
    outcomes = []
    for flow in flows:
        try:
            assignment, state, weight, calls = mva_solve(graph, state, flow, catalog, config, params)
        except FlowRejected as exc:
            log.debug("%s", exc)
            outcomes.append(FlowResult(flow.id, None, None, getattr(exc, "mdra_calls", 0),
                                       exc.stage, exc.reason))
            continue
        outcomes.append(FlowResult(flow.id, assignment, weight, calls))
    return SolveResult(outcomes, state, total_power(graph, state, PowerMode.OBJECTIVE),
                       total_power(graph, state, PowerMode.TOTAL))
