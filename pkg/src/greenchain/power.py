"""Power model for nodes and links, and the per-flow weight assignment.

Weights steer the routing towards components that are already on: an
off component is priced at (roughly) what switching it on would cost,
an on one at a tiny epsilon.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Optional

from .model import FlowSpec, Link, NetworkGraph, Node, NodeKind


class IngressExceedsCapacity(ValueError):
    pass


class InconsistentState(ValueError):
    pass


class PowerMode(enum.Enum):
    OBJECTIVE = "objective"  # controllable nodes and SDN links only
    TOTAL = "total"          # everything that is on


@dataclass(frozen=True)
class WeightParams:
    epsilon_node: float
    epsilon_link: float

    def __post_init__(self):
        if self.epsilon_node <= 0 or self.epsilon_link <= 0:
            raise ValueError("epsilon weights must be strictly positive")

    @classmethod
    def for_graph(cls, graph: NetworkGraph, scale: float = 1e-6) -> "WeightParams":
        eps = scale * graph.min_positive_power()
        return cls(eps, eps)


def node_power(node: Node, on: bool, current_ingress: int = 0) -> float:
    if not on:
        return 0.0
    if node.kind.is_switch:
        return float(node.p_max)
    cap = node.ingress_capacity
    if cap is None:
        return node.theta * node.p_max
    if current_ingress > cap:
        if node.kind is NodeKind.FUNCTION_NODE:
            raise IngressExceedsCapacity(
                f"node {node.id}: ingress {current_ingress} exceeds capacity {cap}")
        # for servers the capacity only normalises the load; saturate at peak
        current_ingress = cap
    return (node.theta + (1.0 - node.theta) * current_ingress / cap) * node.p_max


def link_power(link: Link, on: bool) -> float:
    if not link.is_sdn:
        return float(link.p_max)
    return float(link.p_max) if on else 0.0


def node_weight(node: Node, on: bool, flow: FlowSpec, params: WeightParams) -> float:
    if node.kind is NodeKind.NON_SDN_SWITCH:
        w = params.epsilon_node
    elif node.kind is NodeKind.SDN_SWITCH:
        w = params.epsilon_node if on else float(node.p_max)
    elif not on:
        w = node.theta * node.p_max
    elif node.ingress_capacity is None:
        w = 0.0
    else:
        w = (1.0 - node.theta) * flow.rate / node.ingress_capacity * node.p_max
    # zero-power or theta=1 nodes would otherwise get weight 0
    return max(w, params.epsilon_node)


def link_weight(link: Link, on: bool, params: WeightParams) -> float:
    if not link.is_sdn or on:
        return params.epsilon_link
    return max(float(link.p_max), params.epsilon_link)


@dataclass(frozen=True)
class Weights:
    """Per-flow node and link weights, indexed by id."""

    node: tuple
    link: tuple

    def effective(self, graph: NetworkGraph, link_id: int) -> float:
        link = graph.links[link_id]
        return self.link[link_id] + self.node[link.u] + self.node[link.v]


def assign_weights(graph: NetworkGraph, state, flow: FlowSpec,
                   params: Optional[WeightParams] = None) -> Weights:
    params = params or WeightParams.for_graph(graph)
    nodes = tuple(node_weight(n, state.node_on[n.id], flow, params) for n in graph.nodes)
    links = tuple(link_weight(l, state.link_on[l.id], params) for l in graph.links)
    return Weights(nodes, links)


def total_power(graph: NetworkGraph, state, mode: PowerMode = PowerMode.OBJECTIVE) -> float:
    """Sum of node and link power for ``state``.

    OBJECTIVE mode skips non-SDN switches and non-SDN links (their power is
    not controllable).  TOTAL mode counts every component that is on.
    """
    if len(state.node_on) != graph.num_nodes or len(state.link_on) != graph.num_links:
        raise InconsistentState("state does not match graph dimensions")
    total = 0.0
    for node in graph.nodes:
        if mode is PowerMode.OBJECTIVE and not node.kind.controllable:
            continue
        on = state.node_on[node.id]
        if not node.kind.controllable and not on:
            raise InconsistentState(f"non-SDN node {node.id} is marked off")
        total += node_power(node, on, state.node_ingress_load[node.id])
    for link in graph.links:
        if mode is PowerMode.OBJECTIVE and not link.is_sdn:
            continue
        on = state.link_on[link.id]
        if not link.is_sdn and not on:
            raise InconsistentState(f"non-SDN link {link.id} is marked off")
        total += link_power(link, on)
    return total


def reference_power(graph: NetworkGraph, state=None, loaded: bool = True) -> float:
    """TOTAL power with every node and link on.

    With ``loaded`` the function nodes carry the ingress recorded in
    ``state``; otherwise they sit at idle.
    """
    total = 0.0
    for node in graph.nodes:
        load = state.node_ingress_load[node.id] if (loaded and state is not None) else 0
        total += node_power(node, True, load)
    for link in graph.links:
        total += link_power(link, True)
    return total
