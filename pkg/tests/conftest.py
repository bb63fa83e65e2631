from pathlib import Path

import pytest

from greenchain.formats import load_topology
from greenchain.model import FlowSpec, Link, NetworkFunction, NfCatalog, Node, NodeKind, build_graph

DATA = Path(__file__).resolve().parents[1] / "src" / "greenchain" / "data"

GBPS = 1_000_000_000
MBPS = 1_000_000


@pytest.fixture
def stage_example():
    return load_topology(DATA / "stage_example.topo")


def line_graph(n=4, capacity=GBPS, p_switch=100.0, p_link=10.0):
    """Switches 0-1-...-(n-1) in a line."""
    nodes = [Node(i, NodeKind.SDN_SWITCH, p_switch) for i in range(n)]
    links = [Link(i, i, i + 1, capacity, p_link) for i in range(n - 1)]
    return build_graph(nodes, links)


def one_server_graph(resources=16, ingress=10 * GBPS, link_cap=10 * GBPS):
    """S(0) - T(1) - D(2), server 3 hanging off T."""
    nodes = [
        Node(0, NodeKind.SDN_SWITCH, 100.0),
        Node(1, NodeKind.SDN_SWITCH, 100.0),
        Node(2, NodeKind.SDN_SWITCH, 100.0),
        Node(3, NodeKind.NFV_SERVER, 2000.0, 0.5, ingress, resource_capacity=(resources,)),
    ]
    links = [
        Link(0, 0, 1, link_cap, 5.0),
        Link(1, 1, 2, link_cap, 5.0),
        Link(2, 1, 3, link_cap, 5.0),
    ]
    return build_graph(nodes, links)


def simple_catalog(demands=(2, 6), capacity=GBPS, gammas=None):
    gammas = gammas or [1.0] * len(demands)
    return NfCatalog(NetworkFunction(i, (d,), capacity, g) for i, (d, g) in enumerate(zip(demands, gammas)))


def flow(fid=0, src=0, dst=2, rate=100 * MBPS, chain=(0,)):
    return FlowSpec(fid, src, dst, rate, tuple(chain))


_VERDICTS = pytest.StashKey[list]()


@pytest.fixture
def verdict(request):
    """Record one acceptance line; printed again in the terminal summary."""
    lines = request.config.stash.setdefault(_VERDICTS, [])

    def record(number, title, ok, detail=""):
        line = f"ACCEPTANCE {number:>2} {'PASS' if ok else 'FAIL'}  {title}: {detail}"
        lines.append((number, line))
        print(line)
        return ok

    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(_VERDICTS, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for _, line in sorted(lines):
            terminalreporter.write_line(line)
