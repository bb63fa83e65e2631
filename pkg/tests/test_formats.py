import pytest

from greenchain.capacity import Assignment
from greenchain.formats import FormatError, dump_topology, format_assignment, parse_topology
from greenchain.mva import BeamConfig, solve_all
from greenchain.scenarios import generate, preset, random_small_instance



def test_stage_example_parses(stage_example):
    assert stage_example.graph.num_nodes == 12 and stage_example.graph.num_links == 15
    assert stage_example.placed == [(4, 2)]
    assert stage_example.weights.link[5] == 3
    assert [nf.name for nf in stage_example.catalog] == ["a", "b", "c", "d"]
    assert stage_example.initial_state().resource_used[4] == [1]


def test_assignment_text():
    a = Assignment(3, ((1, 5), (2, 5)), ((0, 1), (), (2,)))
    assert format_assignment(a) == "assign 3 1:5,2:5 0.1|-|2"


@pytest.mark.parametrize("seed", range(5))
def test_round_trip(seed):
    sc = random_small_instance(seed, "mixed", profile="heterogeneous")
    res = solve_all(sc.graph, sc.flows, sc.catalog, BeamConfig(2))
    text = dump_topology(sc.graph, sc.catalog, sc.flows, res.assignments)
    topo = parse_topology(text)
    assert topo.graph == sc.graph
    assert topo.catalog == sc.catalog
    assert topo.flows == sc.flows
    assert topo.assignments == res.assignments
    assert dump_topology(topo.graph, topo.catalog, topo.flows, topo.assignments) == text


def test_round_trip_preset_network():
    sc = generate(preset("small", 1))
    text = dump_topology(sc.graph, sc.catalog, sc.flows)
    assert parse_topology(text).graph == sc.graph


@pytest.mark.parametrize("text", [
    "node 0 router p_max=1\n",
    "node 0 sdn p_max=abc\n",
    "bogus 1 2\n",
    "nf 0 demand=1\n",
    "node 0 sdn p_max=1\nnode 1 sdn p_max=1\nlink 0 0 1 10 1 1 color=red\n",
])
def test_malformed_input(text):
    with pytest.raises(FormatError):
        parse_topology(text)
