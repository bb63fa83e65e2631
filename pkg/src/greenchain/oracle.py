"""Exact solver for small instances by exhaustive joint enumeration.

Flows are enumerated jointly, depth first: for every flow in turn, every
chain position gets every eligible node and every simple route from the
previous stop.  Usage is tracked incrementally with bookkeeping that is
kept separate from :mod:`greenchain.capacity` on purpose, so the two can
check each other.  A branch is cut when its partial power already
reaches the incumbent; power only grows as usage is added, so the cut is
exact.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Optional

from .capacity import Assignment, NetworkState, init_state, replay, validate_solution
from .model import NetworkGraph, NfCatalog, NodeKind, chain_ingress_rate, segment_rate
from .power import PowerMode, total_power

log = logging.getLogger(__name__)

REL_TOL = 1e-9


class BudgetExceeded(RuntimeError):
    pass


class Infeasible(RuntimeError):
    pass


class InstanceTooLarge(ValueError):
    pass


@dataclass(frozen=True)
class OracleLimits:
    max_nodes: int = 12
    max_flows: int = 3
    max_chain: int = 5
    budget: int = 2_000_000  # visited search nodes


@dataclass
class OracleResult:
    assignments: list
    power: float
    state: NetworkState
    visited: int


def simple_paths(graph: NetworkGraph, source: int, target: int) -> list:
    """All simple routes source -> target as link tuples, by node sequence."""
    if source == target:
        return [()]
    found = []

    def dfs(u, nodes, links):
        if u == target:
            found.append((tuple(nodes), tuple(links)))
            return
        for v, lid in graph.incident(u):
            if v in nodes:
                continue
            nodes.append(v)
            links.append(lid)
            dfs(v, nodes, links)
            nodes.pop()
            links.pop()

    dfs(source, [source], [])
    found.sort()
    return [links for _, links in found]


class _Usage:
    """Mutable usage with an undo log."""

    def __init__(self, state: NetworkState):
        self.state = state.copy()
        self._log = []

    def mark(self) -> int:
        return len(self._log)

    def undo(self, mark: int) -> None:
        s = self.state
        while len(self._log) > mark:
            kind, key, old = self._log.pop()
            if kind == "node_on":
                s.node_on[key] = old
            elif kind == "link_on":
                s.link_on[key] = old
            elif kind == "link_load":
                s.link_load[key] = old
            elif kind == "ingress":
                s.node_ingress_load[key] = old
            elif kind == "vnf":
                if old is None:
                    del s.vnf_load[key]
                else:
                    s.vnf_load[key] = old
            elif kind == "placed":
                s.placed.discard(key)
            elif kind == "res":
                s.resource_used[key] = old

    def _set(self, kind, seq, key, value):
        old = seq[key]
        if old != value:
            self._log.append((kind, key, old))
            seq[key] = value

    def route(self, graph: NetworkGraph, links: tuple, rate: int) -> bool:
        s = self.state
        for lid in links:
            link = graph.links[lid]
            load = s.link_load[lid] + rate
            if load > link.usable_capacity:
                return False
            self._set("link_load", s.link_load, lid, load)
            self._set("link_on", s.link_on, lid, True)
            self._set("node_on", s.node_on, link.u, True)
            self._set("node_on", s.node_on, link.v, True)
        return True

    def place(self, graph: NetworkGraph, catalog: NfCatalog, node: int, nf_id: int,
              ingress: int, new_visit: bool) -> bool:
        s = self.state
        n = graph.nodes[node]
        self._set("node_on", s.node_on, node, True)
        if new_visit:
            load = s.node_ingress_load[node] + ingress
            if n.kind is NodeKind.FUNCTION_NODE and load > n.ingress_capacity:
                return False
            self._set("ingress", s.node_ingress_load, node, load)
        if n.kind is NodeKind.NFV_SERVER:
            nf = catalog[nf_id]
            key = (node, nf_id)
            if key not in s.placed:
                used = s.resource_used[node]
                new = [a + d for a, d in zip(used, nf.resource_demand)]
                if any(x > c for x, c in zip(new, n.resource_capacity)):
                    return False
                self._log.append(("res", node, used))
                s.resource_used[node] = new
                self._log.append(("placed", key, None))
                s.placed.add(key)
            old = s.vnf_load.get(key)
            load = (old or 0) + ingress
            if load > nf.processing_capacity:
                return False
            self._log.append(("vnf", key, old))
            s.vnf_load[key] = load
        return True


def exhaustive_solve(graph: NetworkGraph, flows, catalog: NfCatalog,
                     limits: OracleLimits = OracleLimits(),
                     state: Optional[NetworkState] = None) -> OracleResult:
    """Minimum OBJECTIVE power serving every flow; ties go to the first found.

    Raises :class:`Infeasible` if no joint assignment serves all flows and
    :class:`BudgetExceeded` if the search visits more than ``limits.budget``
    nodes.
    """
    flows = list(flows)
    if graph.num_nodes > limits.max_nodes or len(flows) > limits.max_flows:
        raise InstanceTooLarge(f"{graph.num_nodes} nodes / {len(flows)} flows over the limits")
    if any(f.length > limits.max_chain for f in flows):
        raise InstanceTooLarge("chain too long for exhaustive search")
    for f in flows:
        graph.validate_flow(f, catalog)
    base = state if state is not None else init_state(graph)
    usage = _Usage(base)
    path_cache = {}

    def paths(s, t):
        key = (s, t)
        if key not in path_cache:
            path_cache[key] = simple_paths(graph, s, t)
        return path_cache[key]

    eligible = {}
    for f in flows:
        for nf_id in f.chain:
            if nf_id not in eligible:
                eligible[nf_id] = [n.id for n in graph.nodes if n.supports(nf_id)]

    best = {"power": float("inf"), "assign": None}
    visited = 0
    seen = set()

    def bound_hit() -> bool:
        if best["assign"] is None:
            return False
        p = total_power(graph, usage.state, PowerMode.OBJECTIVE)
        return p >= best["power"] - REL_TOL * abs(best["power"])

    def signature(fi, pos, stop, current):
        s = usage.state
        return (fi, pos, stop, current, tuple(s.node_on), tuple(s.link_on), tuple(s.link_load),
                tuple(s.node_ingress_load), frozenset(s.placed), frozenset(s.vnf_load.items()))

    def search(fi: int, pos: int, stop: int, placed_nodes: tuple, segs: tuple, done: tuple):
        nonlocal visited
        visited += 1
        if visited > limits.budget:
            raise BudgetExceeded(f"more than {limits.budget} search nodes")
        if bound_hit():
            return
        if fi == len(flows):
            power = total_power(graph, usage.state, PowerMode.OBJECTIVE)
            report = validate_solution(graph, catalog, flows, done, state=usage.state)
            if report.ok:
                best["power"] = power
                best["assign"] = done
            else:
                log.debug("oracle leaf rejected: %s", report.to_text())
            return
        key = signature(fi, pos, stop, placed_nodes[-1:] if placed_nodes else ())
        if key in seen:
            return
        seen.add(key)
        flow = flows[fi]
        if pos == flow.length + 1:
            rate = segment_rate(flow, catalog, flow.length)
            for route in paths(stop, flow.destination):
                mark = usage.mark()
                if usage.route(graph, route, rate):
                    a = Assignment(flow.id, tuple(enumerate(placed_nodes, start=1)), segs + (route,))
                    nxt = flows[fi + 1].source if fi + 1 < len(flows) else None
                    search(fi + 1, 1, nxt, (), (), done + (a,))
                usage.undo(mark)
            return
        nf_id = flow.chain[pos - 1]
        rate = segment_rate(flow, catalog, pos - 1)
        ingress = chain_ingress_rate(flow, catalog, pos)
        for node in eligible[nf_id]:
            same = pos > 1 and placed_nodes[-1] == node
            for route in paths(stop, node):
                mark = usage.mark()
                if (usage.route(graph, route, rate)
                        and usage.place(graph, catalog, node, nf_id, ingress, not same)):
                    search(fi, pos + 1, node, placed_nodes + (node,), segs + (route,), done)
                usage.undo(mark)

    if flows:
        search(0, 1, flows[0].source, (), (), ())
    else:
        best["power"] = total_power(graph, base, PowerMode.OBJECTIVE)
        best["assign"] = ()
    if best["assign"] is None:
        raise Infeasible("no joint assignment serves every flow")
    final = replay(graph, catalog, flows, best["assign"], base)
    return OracleResult(list(best["assign"]), best["power"], final, visited)

