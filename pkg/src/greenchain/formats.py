"""Line-oriented text formats for topologies and solutions.

One record per line, ``#`` starts a comment::

    nf   <id> demand=<d1,d2,..> capacity=<bps> [gamma=<g>] [name=<s>]
    node <id> <kind> p_max=<W> [theta=<r>] [ingress=<bps>] [resources=<c1,..>]
         [supports=<nf,..>] [weight=<w>]
    link <id> <u> <v> <capacity> <sdn> <pmax> [tau=<r>] [weight=<w>]
    flow <id> <src> <dst> <rate> <nf,nf,..>
    place <node> <nf>
    assign <flow> <k:node,..> <seg|seg|..>

``kind`` is one of ``nonsdn sdn nfv pfn``; ``sdn`` is ``0``, ``1`` or
``auto``.  In ``assign`` a segment is a ``.``-joined list of link ids, or
``-`` when empty.  Explicit ``weight=`` values replace the power-derived
weights (missing ones default to 0), which is how hand-drawn examples with
given path weights are encoded.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from .capacity import Assignment, NetworkState, init_state, preplace
from .model import FlowSpec, Link, NetworkFunction, NetworkGraph, NfCatalog, Node, NodeKind, build_graph
from .power import Weights


class FormatError(ValueError):
    pass


def _num(text: str):
    value = float(text)
    return int(value) if value.is_integer() and "." not in text and "e" not in text.lower() else value


def _int(text: str) -> int:
    value = float(text)
    if not value.is_integer():
        raise FormatError(f"expected an integer, got {text!r}")
    return int(value)


def _split_kv(tokens):
    pos, kv = [], {}
    for tok in tokens:
        if "=" in tok:
            k, v = tok.split("=", 1)
            kv[k] = v
        else:
            pos.append(tok)
    return pos, kv


@dataclass
class Topology:
    graph: NetworkGraph
    catalog: NfCatalog
    flows: list = field(default_factory=list)
    placed: list = field(default_factory=list)
    weights: Optional[Weights] = None
    assignments: list = field(default_factory=list)

    def initial_state(self) -> NetworkState:
        state = init_state(self.graph)
        for node, nf in self.placed:
            state = preplace(state, self.catalog, node, nf)
        return state


_KEYS = {
    "nf": {"demand", "capacity", "gamma", "name"},
    "node": {"p_max", "theta", "ingress", "resources", "supports", "weight"},
    "link": {"tau", "weight"},
    "flow": set(),
    "place": set(),
    "assign": set(),
}


def parse_topology(text: str) -> Topology:
    nfs, nodes, links, flows, placed, assigns = [], [], [], [], [], []
    node_w, link_w = {}, {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        head, *rest = line.split()
        pos, kv = _split_kv(rest)
        unknown = sorted(set(kv) - _KEYS.get(head, set()))
        if head in _KEYS and unknown:
            raise FormatError(f"line {lineno}: unknown keys {', '.join(unknown)}")
        try:
            if head == "nf":
                nfs.append(NetworkFunction(
                    id=_int(pos[0]),
                    resource_demand=tuple(_num(x) for x in kv.get("demand", "0").split(",")),
                    processing_capacity=_int(kv["capacity"]),
                    rising_factor=float(kv.get("gamma", "1")),
                    name=kv.get("name", ""),
                ))
            elif head == "node":
                nid, kind = _int(pos[0]), NodeKind(pos[1])
                nodes.append(Node(
                    id=nid,
                    kind=kind,
                    p_max=float(kv.get("p_max", "0")),
                    theta=float(kv.get("theta", "1")),
                    ingress_capacity=_int(kv["ingress"]) if "ingress" in kv else None,
                    resource_capacity=(tuple(_num(x) for x in kv["resources"].split(","))
                                       if kind is NodeKind.NFV_SERVER else None),
                    supported_nfs=(frozenset(_int(x) for x in kv["supports"].split(",") if x)
                                   if kind is NodeKind.FUNCTION_NODE else None),
                ))
                if "weight" in kv:
                    node_w[nid] = float(kv["weight"])
            elif head == "link":
                lid = _int(pos[0])
                sdn = {"0": False, "1": True, "auto": None}[pos[4]]
                links.append(Link(lid, _int(pos[1]), _int(pos[2]), _int(pos[3]),
                                  float(pos[5]), float(kv.get("tau", "1")), sdn))
                if "weight" in kv:
                    link_w[lid] = float(kv["weight"])
            elif head == "flow":
                flows.append(FlowSpec(_int(pos[0]), _int(pos[1]), _int(pos[2]), _int(pos[3]),
                                      tuple(_int(x) for x in pos[4].split(","))))
            elif head == "place":
                placed.append((_int(pos[0]), _int(pos[1])))
            elif head == "assign":
                places = tuple(tuple(_int(x) for x in p.split(":")) for p in pos[1].split(","))
                segs = tuple(() if s == "-" else tuple(_int(x) for x in s.split("."))
                             for s in pos[2].split("|"))
                assigns.append(Assignment(_int(pos[0]), places, segs))
            else:
                raise FormatError(f"unknown record {head!r}")
        except FormatError:
            raise
        except (IndexError, KeyError, ValueError) as exc:
            raise FormatError(f"line {lineno}: {raw.strip()!r}: {exc}") from exc
    graph = build_graph(nodes, links)
    catalog = NfCatalog(sorted(nfs, key=lambda nf: nf.id))
    weights = None
    if node_w or link_w:
        weights = Weights(tuple(node_w.get(i, 0.0) for i in range(graph.num_nodes)),
                          tuple(link_w.get(i, 0.0) for i in range(graph.num_links)))
    for f in flows:
        graph.validate_flow(f, catalog)
    return Topology(graph, catalog, flows, placed, weights, assigns)


def load_topology(path) -> Topology:
    return parse_topology(Path(path).read_text())


def _fmt(x) -> str:
    if isinstance(x, float) and x.is_integer():
        return str(int(x))
    return repr(x) if isinstance(x, float) else str(x)


def format_assignment(a: Assignment) -> str:
    places = ",".join(f"{k}:{u}" for k, u in a.placements)
    segs = "|".join(".".join(map(str, s)) if s else "-" for s in a.segments)
    return f"assign {a.flow} {places} {segs}"


def dump_topology(graph: NetworkGraph, catalog: NfCatalog, flows=(), assignments=(),
                  placed=()) -> str:
    lines = []
    for nf in catalog:
        extra = f" name={nf.name}" if nf.name else ""
        lines.append(f"nf {nf.id} demand={','.join(_fmt(d) for d in nf.resource_demand)} "
                     f"capacity={nf.processing_capacity} gamma={_fmt(nf.rising_factor)}{extra}")
    for n in graph.nodes:
        parts = [f"node {n.id} {n.kind.value} p_max={_fmt(n.p_max)} theta={_fmt(n.theta)}"]
        if n.ingress_capacity is not None:
            parts.append(f"ingress={n.ingress_capacity}")
        if n.resource_capacity is not None:
            parts.append("resources=" + ",".join(_fmt(c) for c in n.resource_capacity))
        if n.supported_nfs is not None:
            parts.append("supports=" + ",".join(map(str, sorted(n.supported_nfs))))
        lines.append(" ".join(parts))
    for l in graph.links:
        lines.append(f"link {l.id} {l.u} {l.v} {l.capacity} {int(l.is_sdn)} {_fmt(l.p_max)} "
                     f"tau={_fmt(l.utilization)}")
    for f in flows:
        lines.append(f"flow {f.id} {f.source} {f.destination} {f.rate} {','.join(map(str, f.chain))}")
    for node, nf in placed:
        lines.append(f"place {node} {nf}")
    for a in assignments:
        lines.append(format_assignment(a))
    return "\n".join(lines) + "\n"
