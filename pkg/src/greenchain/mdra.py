"""Node-weighted Dijkstra routing with capacity-infeasible links removed.

Each link is priced as its own weight plus the weights of both endpoints.
A link whose spare capacity (counted as if it were on) cannot take the
required rate is priced at infinity, i.e. skipped.  Ties are broken by the
lexicographically smallest node sequence, so results are reproducible.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass
from typing import Optional

from .model import FlowSpec, NetworkGraph
from .power import WeightParams, Weights, assign_weights


class NoFeasiblePath(RuntimeError):
    pass


@dataclass(frozen=True)
class RoutedEdge:
    source: int
    target: int
    path: tuple      # link ids, empty when source == target
    nodes: tuple     # node sequence, starts at source and ends at target
    weight: float


def link_costs(graph: NetworkGraph, state, weights: Weights, required_rate: int) -> list:
    """Effective weight per link, ``math.inf`` where the rate does not fit."""
    out = []
    for link in graph.links:
        if required_rate > state.available_link(link.id):
            out.append(math.inf)
        else:
            out.append(weights.link[link.id] + weights.node[link.u] + weights.node[link.v])
    return out


def shortest_tree(graph: NetworkGraph, costs: list, source: int) -> dict:
    """Single-source search; maps every reachable node to ``(weight, nodes, links)``."""
    best = {source: (0.0, (source,), ())}
    done = set()
    heap = [(0.0, (source,), (), source)]
    while heap:
        dist, nodes, links, u = heapq.heappop(heap)
        if u in done:
            continue
        done.add(u)
        for v, lid in graph.incident(u):
            c = costs[lid]
            if c == math.inf or v in done or v in nodes:
                continue
            cand = (dist + c, nodes + (v,))
            cur = best.get(v)
            if cur is None or cand < cur[:2]:
                best[v] = (cand[0], cand[1], links + (lid,))
                heapq.heappush(heap, (cand[0], cand[1], links + (lid,), v))
    return best


def mdra_shortest_path(graph: NetworkGraph, state, flow: FlowSpec, source: int, target: int,
                       required_rate: int, params: Optional[WeightParams] = None,
                       weights: Optional[Weights] = None) -> RoutedEdge:
    """Minimum-weight route from ``source`` to ``target`` able to carry ``required_rate``."""
    if source == target:
        return RoutedEdge(source, target, (), (source,), 0.0)
    if weights is None:
        weights = assign_weights(graph, state, flow, params)
    tree = shortest_tree(graph, link_costs(graph, state, weights, required_rate), source)
    if target not in tree:
        raise NoFeasiblePath(f"no route {source}->{target} for rate {required_rate}")
    w, nodes, links = tree[target]
    return RoutedEdge(source, target, links, nodes, w)


class EdgeFinder:
    """Caches single-source trees per (source, rate) and counts edge queries.

    ``calls`` counts every (source, target) edge request, which is what the
    stage graph's complexity bound is stated in.
    """

    def __init__(self, graph: NetworkGraph, state, weights: Weights):
        self.graph = graph
        self.state = state
        self.weights = weights
        self.calls = 0
        self._costs = {}
        self._trees = {}

    def edge(self, source: int, target: int, rate: int) -> Optional[RoutedEdge]:
        self.calls += 1
        if source == target:
            return RoutedEdge(source, target, (), (source,), 0.0)
        key = (source, rate)
        tree = self._trees.get(key)
        if tree is None:
            costs = self._costs.get(rate)
            if costs is None:
                costs = self._costs[rate] = link_costs(self.graph, self.state, self.weights, rate)
            tree = self._trees[key] = shortest_tree(self.graph, costs, source)
        hit = tree.get(target)
        if hit is None:
            return None
        return RoutedEdge(source, target, hit[2], hit[1], hit[0])
