"""Seeded scenario generation and parameter presets.

Randomness comes only from :class:`random.Random` instances seeded with
strings such as ``"7:wiring"``.  String seeds are hashed with SHA-512 by
the standard library, so results do not depend on the platform or on
``PYTHONHASHSEED``.  Every aspect of a scenario (wiring, capacities,
rates, ...) draws from its own stream, which keeps unrelated draws fixed
when one knob changes: sweeping the mean rate reuses the same uniform
draws, and adding NFV servers leaves the existing attachments in place.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field, fields, replace
from typing import Optional

from .model import FlowSpec, Link, NetworkFunction, NfCatalog, Node, NodeKind, build_graph

MBPS = 1_000_000
GBPS = 1_000_000_000
# the normalised structure study counts rates in abstract units
STRUCTURE_UNIT = MBPS


class InfeasibleCounts(ValueError):
    pass


class ConfigParseError(ValueError):
    pass


# (access, switches, links, backbone, sgw, pgw, nfv, ixp)
PRESETS = {
    "small": (16, 32, 88, 4, 4, 2, 8, 1),
    "medium": (60, 90, 282, 42, 6, 3, 12, 3),
    "large": (100, 150, 460, 60, 10, 5, 25, 5),
}
_PRESET_KEYS = ("access", "switches", "links", "backbone", "sgw", "pgw", "nfv", "ixp")

SWITCH_POWER_W = 1500.0      # chassis 500 W + line cards 1000 W
NFV_PEAK_W, NFV_THETA, NFV_CORES = 2000.0, 0.5, 16
NFV_INGRESS_NORM = 10 * GBPS
GW_PEAK_W, GW_THETA = 20000.0, 0.4
SGW_INGRESS, PGW_INGRESS = 10 * GBPS, 20 * GBPS
SGW_NFS, PGW_NFS = frozenset({0, 1, 2}), frozenset({3, 4})

# normalised structure study: (nfv, non-nfv, sdn switches, access) per structure
STRUCTURES = {
    1: (0, 2, 7, 2),
    2: (2, 0, 7, 2),
    3: (4, 0, 5, 2),
    4: (8, 0, 1, 2),
    5: (2, 2, 5, 2),
    6: (4, 2, 3, 2),
}
# NFV node type per structure -> (power, ingress, resources, demand g1-g3, demand g4-g5)
NFV_TYPES = {
    1: (50.0, 10, 60, 20, 30),
    2: (25.0, 5, 30, 10, 15),
    3: (12.5, 2.5, 15, 5, 7.5),
}
STRUCTURE_NFV_TYPE = {2: 1, 5: 1, 3: 2, 6: 2, 4: 3, 1: 1}
STRUCTURE_NODES, STRUCTURE_LINKS = 11, 19


@dataclass(frozen=True)
class ScenarioSpec:
    seed: int
    size: str = "small"
    access: int = 16
    switches: int = 32
    links: int = 88
    backbone: int = 4
    sgw: int = 4
    pgw: int = 2
    nfv: int = 8
    ixp: int = 1
    sdn_fraction: float = 1.0
    psi: int = 1
    flows: Optional[int] = None          # default: one per access node
    rate_min_mbps: float = 1.0
    rate_max_mbps: float = 900.0
    rate_mean_mbps: Optional[float] = None   # overrides min/max with [m/2, 3m/2]
    link_capacity_min_mbps: float = 1.0
    link_capacity_max_mbps: float = 1000.0
    backbone_capacity_gbps: float = 40.0
    attachment_capacity_gbps: float = 40.0
    tau: float = 1.0
    link_power_w: float = 5.0
    structure: int = 0                   # 1..6 selects the normalised structure study
    level: int = 1                       # access rate in units for structure runs

    def __post_init__(self):
        for name in ("access", "switches", "links", "backbone", "sgw", "pgw", "nfv", "ixp"):
            if getattr(self, name) < 0:
                raise InfeasibleCounts(f"{name} must be >= 0")
        if not 0.0 <= self.sdn_fraction <= 1.0:
            raise ValueError("sdn_fraction must lie in [0, 1]")
        if self.psi < 1:
            raise ValueError("psi must be >= 1")
        if self.rate_min_mbps > self.rate_max_mbps:
            raise ValueError("rate_min_mbps > rate_max_mbps")

    @property
    def rate_bounds_mbps(self) -> tuple:
        if self.rate_mean_mbps is not None:
            return 0.5 * self.rate_mean_mbps, 1.5 * self.rate_mean_mbps
        return self.rate_min_mbps, self.rate_max_mbps


def preset(size: str, seed: int, **overrides) -> ScenarioSpec:
    if size not in PRESETS:
        raise ValueError(f"unknown size {size!r}")
    counts = dict(zip(_PRESET_KEYS, PRESETS[size]))
    counts.update(overrides)
    return ScenarioSpec(seed=seed, size=size, **counts)


def _coerce(f, text: str):
    if f.name in ("flows", "rate_mean_mbps") and text.lower() in ("none", ""):
        return None
    if f.type in ("int", "Optional[int]"):
        return int(text)
    if f.type in ("float", "Optional[float]"):
        return float(text)
    return text


def parse_config(text: str) -> ScenarioSpec:
    """Flat ``key = value`` config; ``size`` picks the preset counts first."""
    values = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigParseError(f"line {lineno}: expected key = value")
        key, value = (p.strip() for p in line.split("=", 1))
        values[key] = value
    known = {f.name: f for f in fields(ScenarioSpec)}
    unknown = sorted(set(values) - set(known))
    if unknown:
        raise ConfigParseError(f"unknown keys: {', '.join(unknown)}")
    if "seed" not in values:
        raise ConfigParseError("seed is mandatory")
    try:
        parsed = {k: _coerce(known[k], v) for k, v in values.items()}
        size = parsed.get("size", "small")
        if parsed.get("structure"):
            base = structure_preset(parsed["structure"], seed=parsed["seed"])
        elif size in PRESETS:
            base = preset(size, parsed["seed"])
        elif size == "custom":
            base = ScenarioSpec(seed=parsed["seed"], size="custom")
        else:
            raise ConfigParseError(f"unknown size {size!r}")
        return replace(base, **parsed)
    except (TypeError, ValueError) as exc:
        if isinstance(exc, ConfigParseError):
            raise
        raise ConfigParseError(str(exc)) from exc


def format_config(spec: ScenarioSpec) -> str:
    lines = []
    for f in fields(ScenarioSpec):
        lines.append(f"{f.name} = {getattr(spec, f.name)}")
    return "\n".join(lines) + "\n"


def default_catalog() -> NfCatalog:
    """Five functions g1..g5 (ids 0..4): CPU cores, 1 Gbps ingress, rising factors."""
    cores = (2, 6, 4, 4, 8)
    gammas = (1.0, 1.1, 1.0, 1.0, 1.05)
    return NfCatalog(NetworkFunction(i, (c,), 1 * GBPS, g, f"g{i + 1}")
                     for i, (c, g) in enumerate(zip(cores, gammas)))


def structure_catalog(nfv_type: int) -> NfCatalog:
    _, ingress, _, low, high = NFV_TYPES[nfv_type]
    demands = (low, low, low, high, high)
    return NfCatalog(NetworkFunction(i, (d,), int(ingress * STRUCTURE_UNIT), 1.0, f"g{i + 1}")
                     for i, d in enumerate(demands))


def structure_preset(n: int, seed: int = 0, level: int = 1) -> ScenarioSpec:
    """Counts of the normalised 11-node study; ``level`` is the access rate in units."""
    if n not in STRUCTURES:
        raise ValueError("structure must be in 1..6")
    nfv, non_nfv, sdn, access = STRUCTURES[n]
    return ScenarioSpec(seed=seed, size="structure", access=access, switches=sdn,
                        links=STRUCTURE_LINKS, backbone=0, sgw=non_nfv // 2,
                        pgw=non_nfv - non_nfv // 2, nfv=nfv, ixp=0, structure=n, level=level,
                        link_power_w=5.0)


@dataclass
class Scenario:
    spec: ScenarioSpec
    graph: object
    catalog: NfCatalog
    flows: list = field(default_factory=list)


def _rng(seed: int, stream: str) -> random.Random:
    return random.Random(f"{seed}:{stream}")


def _wire_switches(seed: int, switches: int, budget: int) -> list:
    """Random spanning tree over the switches plus ``budget - (n-1)`` extra pairs."""
    if switches == 0:
        return []
    if budget < switches - 1:
        raise InfeasibleCounts(f"{budget} switch links cannot connect {switches} switches")
    max_pairs = switches * (switches - 1) // 2
    if budget > max_pairs:
        raise InfeasibleCounts(f"{budget} switch links exceed the {max_pairs} possible pairs")
    rng = _rng(seed, "wiring")
    order = list(range(switches))
    rng.shuffle(order)
    pairs = []
    for i in range(1, switches):
        a, b = order[i], order[rng.randrange(i)]
        pairs.append((min(a, b), max(a, b)))
    used = set(pairs)
    rest = [(a, b) for a in range(switches) for b in range(a + 1, switches) if (a, b) not in used]
    pairs.extend(rng.sample(rest, budget - len(pairs)))
    return pairs


def generate(spec: ScenarioSpec) -> Scenario:
    """Build the graph, catalog and flows of ``spec`` (deterministic in the seed)."""
    if spec.structure:
        return _generate_structure(spec)
    return _generate_network(spec)


def _generate_network(spec: ScenarioSpec) -> Scenario:
    catalog = default_catalog()
    nodes = []
    nid = 0
    # switches first, then access nodes, internet exchange points and hosts
    sdn_rng = _rng(spec.seed, "sdn")
    ranks = [sdn_rng.random() for _ in range(spec.switches)]
    n_sdn = round(spec.sdn_fraction * spec.switches)
    sdn_set = set(sorted(range(spec.switches), key=lambda i: (ranks[i], i))[:n_sdn])
    for i in range(spec.switches):
        kind = NodeKind.SDN_SWITCH if i in sdn_set else NodeKind.NON_SDN_SWITCH
        nodes.append(Node(nid, kind, SWITCH_POWER_W))
        nid += 1
    access_ids = list(range(nid, nid + spec.access))
    for _ in range(spec.access):
        nodes.append(Node(nid, NodeKind.SDN_SWITCH, 0.0))
        nid += 1
    ixp_ids = list(range(nid, nid + spec.ixp))
    for _ in range(spec.ixp):
        nodes.append(Node(nid, NodeKind.SDN_SWITCH, 0.0))
        nid += 1
    host_specs = []
    for i in range(spec.sgw):
        host_specs.append(("sgw", i, Node(nid, NodeKind.FUNCTION_NODE, GW_PEAK_W, GW_THETA,
                                          SGW_INGRESS, supported_nfs=SGW_NFS)))
        nid += 1
    for i in range(spec.pgw):
        host_specs.append(("pgw", i, Node(nid, NodeKind.FUNCTION_NODE, GW_PEAK_W, GW_THETA,
                                          PGW_INGRESS, supported_nfs=PGW_NFS)))
        nid += 1
    for i in range(spec.nfv):
        host_specs.append(("nfv", i, Node(nid, NodeKind.NFV_SERVER, NFV_PEAK_W, NFV_THETA,
                                          NFV_INGRESS_NORM, resource_capacity=(NFV_CORES,))))
        nid += 1
    nodes.extend(h[2] for h in host_specs)

    stubs = spec.access + spec.ixp + len(host_specs)
    switch_budget = spec.links - stubs
    if spec.switches == 0 and stubs:
        raise InfeasibleCounts("stub nodes need at least one switch")
    if switch_budget < spec.backbone:
        raise InfeasibleCounts("not enough switch links for the backbone count")
    pairs = _wire_switches(spec.seed, spec.switches, switch_budget)
    backbone = set(_rng(spec.seed, "backbone").sample(range(len(pairs)), spec.backbone))
    cap_rng = _rng(spec.seed, "capacity")
    lo, hi = spec.link_capacity_min_mbps * MBPS, spec.link_capacity_max_mbps * MBPS
    links = []
    for i, (a, b) in enumerate(pairs):
        draw = cap_rng.random()
        if i in backbone:
            cap = int(spec.backbone_capacity_gbps * GBPS)
        else:
            cap = int(lo + draw * (hi - lo))
        links.append(Link(len(links), a, b, cap, spec.link_power_w, spec.tau))
    attach = int(spec.attachment_capacity_gbps * GBPS)

    def stub(stream: str, node_id: int):
        peer = _rng(spec.seed, stream).randrange(spec.switches)
        links.append(Link(len(links), peer, node_id, attach, spec.link_power_w, spec.tau))

    for i, a in enumerate(access_ids):
        stub(f"attach:access:{i}", a)
    for i, x in enumerate(ixp_ids):
        stub(f"attach:ixp:{i}", x)
    for kind, i, node in host_specs:
        stub(f"attach:{kind}:{i}", node.id)
    graph = build_graph(nodes, links)

    flows = []
    count = spec.flows if spec.flows is not None else spec.access
    if count and not (access_ids and ixp_ids):
        raise InfeasibleCounts("flows need access nodes and internet exchange points")
    rate_rng = _rng(spec.seed, "rates")
    dest_rng = _rng(spec.seed, "destinations")
    rlo, rhi = spec.rate_bounds_mbps
    chain = tuple(range(len(catalog)))
    for f in range(count):
        u = rate_rng.random()
        rate = max(1, round((rlo + u * (rhi - rlo)) * MBPS))
        dst = ixp_ids[dest_rng.randrange(len(ixp_ids))]
        flows.append(FlowSpec(f, access_ids[f % len(access_ids)], dst, rate, chain))
    return Scenario(spec, graph, catalog, flows)


def _generate_structure(spec: ScenarioSpec) -> Scenario:
    nfv_type = STRUCTURE_NFV_TYPE[spec.structure]
    power, ingress, resources, _, _ = NFV_TYPES[nfv_type]
    catalog = structure_catalog(nfv_type)
    switch_power, link_power, link_cap = 10.0, spec.link_power_w, 5 * STRUCTURE_UNIT
    nodes = []
    n_sw = spec.switches + spec.access
    for i in range(n_sw):
        nodes.append(Node(i, NodeKind.SDN_SWITCH, switch_power))
    access_ids = list(range(spec.switches, n_sw))
    nid = n_sw
    hosts = []
    for i in range(spec.sgw):
        hosts.append(Node(nid, NodeKind.FUNCTION_NODE, 50.0, 1.0, 10 * STRUCTURE_UNIT,
                          supported_nfs=frozenset({0, 1, 2})))
        nid += 1
    for i in range(spec.pgw):
        hosts.append(Node(nid, NodeKind.FUNCTION_NODE, 50.0, 1.0, 10 * STRUCTURE_UNIT,
                          supported_nfs=frozenset({3, 4})))
        nid += 1
    for i in range(spec.nfv):
        hosts.append(Node(nid, NodeKind.NFV_SERVER, power, 1.0, int(ingress * STRUCTURE_UNIT),
                          resource_capacity=(resources,)))
        nid += 1
    nodes.extend(hosts)
    # the normalised study has 19 links; dense host counts leave fewer switch pairs
    budget = min(spec.links - len(hosts), n_sw * (n_sw - 1) // 2)
    pairs = _wire_switches(spec.seed, n_sw, budget)
    links = [Link(i, a, b, link_cap, link_power) for i, (a, b) in enumerate(pairs)]
    att = _rng(spec.seed, "attach")
    for h in hosts:
        links.append(Link(len(links), att.randrange(n_sw), h.id, 2 * link_cap, link_power))
    graph = build_graph(nodes, links)
    rate = spec.level * STRUCTURE_UNIT
    chain = tuple(range(len(catalog)))
    flows = [FlowSpec(0, access_ids[0], access_ids[1], rate, chain),
             FlowSpec(1, access_ids[1], access_ids[0], rate, chain)]
    return Scenario(spec, graph, catalog, flows)


def random_small_instance(seed: int, hosts: str = "mixed", profile: str = "normalized",
                          max_nodes: int = 10, max_flows: int = 2, max_chain: int = 3) -> Scenario:
    """Tiny random instance for exact-solver comparisons.

    ``hosts`` is ``"nfv"``, ``"pfn"`` or ``"mixed"`` and fixes which kinds of
    function hosts appear.  The ``"normalized"`` profile uses the uniform
    per-kind parameters of the 11-node structure study on a random
    topology; ``"heterogeneous"`` draws powers and capacities per component.
    """
    if profile == "normalized":
        return _normalized_instance(seed, hosts, max_nodes, max_flows, max_chain)
    if profile != "heterogeneous":
        raise ValueError(f"unknown profile {profile!r}")
    rng = _rng(seed, f"tiny:{hosts}")
    n_nf = rng.randint(1, 3)
    catalog = NfCatalog(NetworkFunction(i, (rng.choice((2, 4, 6)),), rng.choice((600, 1000)) * MBPS,
                                        rng.choice((1.0, 1.0, 1.1)), f"g{i + 1}")
                        for i in range(n_nf))
    n_hosts = rng.randint(1, 3)
    n_sw = rng.randint(3, max_nodes - n_hosts)
    kinds = []
    for i in range(n_hosts):
        if hosts == "nfv" or (hosts == "mixed" and rng.random() < 0.5):
            kinds.append("nfv")
        else:
            kinds.append("pfn")
    nodes = []
    for i in range(n_sw):
        kind = NodeKind.SDN_SWITCH if rng.random() < 0.8 else NodeKind.NON_SDN_SWITCH
        nodes.append(Node(i, kind, float(rng.choice((100, 150, 200)))))
    for j, k in enumerate(kinds):
        nid = n_sw + j
        if k == "nfv":
            nodes.append(Node(nid, NodeKind.NFV_SERVER, float(rng.choice((300, 500))), 0.5,
                              2 * GBPS, resource_capacity=(rng.choice((8, 12, 16)),)))
        else:
            support = frozenset(i for i in range(n_nf) if rng.random() < 0.7) or frozenset({0})
            nodes.append(Node(nid, NodeKind.FUNCTION_NODE, float(rng.choice((400, 800))), 0.4,
                              rng.choice((1, 2)) * GBPS, supported_nfs=support))
    if hosts == "pfn":
        covered = set().union(*(n.supported_nfs for n in nodes[n_sw:]))
        missing = sorted(set(range(n_nf)) - covered)
        if missing:
            last = nodes[-1]
            nodes[-1] = replace(last, supported_nfs=last.supported_nfs | frozenset(missing))
    max_pairs = n_sw * (n_sw - 1) // 2
    budget = rng.randint(n_sw - 1, min(max_pairs, n_sw + 3))
    pairs = _wire_switches(seed, n_sw, budget) if n_sw else []
    links = []
    for a, b in pairs:
        links.append(Link(len(links), a, b, rng.choice((500, 1000, 2000)) * MBPS,
                          float(rng.choice((5, 10, 20)))))
    for h in nodes[n_sw:]:
        links.append(Link(len(links), rng.randrange(n_sw), h.id, 4 * GBPS, 5.0))
    graph = build_graph(nodes, links)
    flows = []
    for f in range(rng.randint(1, max_flows)):
        src, dst = rng.sample(range(n_sw), 2)
        length = rng.randint(1, min(max_chain, n_nf))
        chain = tuple(rng.sample(range(n_nf), length))
        flows.append(FlowSpec(f, src, dst, rng.choice((100, 200, 400, 700)) * MBPS, chain))
    return Scenario(ScenarioSpec(seed=seed, size="custom"), graph, catalog, flows)


def _normalized_instance(seed: int, hosts: str, max_nodes: int, max_flows: int,
                         max_chain: int) -> Scenario:
    rng = _rng(seed, f"normalized:{hosts}")
    nfv_type = rng.randint(1, 3)
    power, ingress, resources, _, _ = NFV_TYPES[nfv_type]
    catalog = structure_catalog(nfv_type)
    unit = STRUCTURE_UNIT
    if hosts == "nfv":
        n_nfv, n_gw = rng.randint(1, 3), 0
    elif hosts == "pfn":
        n_nfv, n_gw = 0, 2
    else:
        n_nfv, n_gw = rng.randint(1, 2), rng.randint(1, 2)
    n_sw = rng.randint(3, max_nodes - n_nfv - n_gw)
    nodes = [Node(i, NodeKind.SDN_SWITCH, 10.0) for i in range(n_sw)]
    nid = n_sw
    groups = [frozenset({0, 1, 2}), frozenset({3, 4})]
    first = rng.randrange(2)
    for j in range(n_gw):
        nodes.append(Node(nid, NodeKind.FUNCTION_NODE, 50.0, 1.0, 10 * unit,
                          supported_nfs=groups[(first + j) % 2]))
        nid += 1
    for _ in range(n_nfv):
        nodes.append(Node(nid, NodeKind.NFV_SERVER, power, 1.0, int(ingress * unit),
                          resource_capacity=(resources,)))
        nid += 1
    max_pairs = n_sw * (n_sw - 1) // 2
    budget = rng.randint(n_sw - 1, min(max_pairs, n_sw + 3))
    pairs = _wire_switches(seed, n_sw, budget)
    links = [Link(i, a, b, 5 * unit, 5.0) for i, (a, b) in enumerate(pairs)]
    for h in nodes[n_sw:]:
        links.append(Link(len(links), rng.randrange(n_sw), h.id, 10 * unit, 5.0))
    graph = build_graph(nodes, links)
    if n_gw == 1 and n_nfv == 0:
        pool = sorted(nodes[n_sw].supported_nfs)
    else:
        pool = list(range(len(catalog)))
    level = rng.randint(1, 5)
    flows = []
    for f in range(rng.randint(1, max_flows)):
        src, dst = rng.sample(range(n_sw), 2)
        length = rng.randint(1, min(max_chain, len(pool)))
        chain = tuple(sorted(rng.sample(pool, length)))
        flows.append(FlowSpec(f, src, dst, level * unit, chain))
    return Scenario(ScenarioSpec(seed=seed, size="custom"), graph, catalog, flows)
