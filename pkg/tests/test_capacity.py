import random

import pytest
from hypothesis import given, settings, strategies as st

from greenchain.capacity import (Assignment, ValidationFailed, ValidationReport, check_c5, check_c6,
                                 check_c7, check_c11, commit, init_state, preplace, replay,
                                 validate_assignment, validate_solution, walk_nodes)
from greenchain.model import Link, Node, NodeKind, build_graph

from conftest import GBPS, MBPS, flow, line_graph, one_server_graph, simple_catalog
from instances import random_commit_sequence
from reference_impls import recompute_usage, state_matches

# S0 -> T1 -> server 3 -> T1 -> D2
VIA_SERVER = Assignment(0, ((1, 3),), ((0, 2), (2, 1)))


def test_init_state_all_off():
    g = one_server_graph()
    s = init_state(g)
    assert not any(s.node_on) and not any(s.link_on)
    assert s.resource_used == {3: [0]}
    assert s.residual_link(0) == 0            # off link has no usable capacity
    assert s.available_link(0) == 10 * GBPS


def test_commit_updates_usage_and_flags():
    g, cat = one_server_graph(), simple_catalog()
    f = flow(chain=(1,))
    s0 = init_state(g)
    s1 = commit(s0, g, VIA_SERVER, f, cat)
    assert s1.link_load == [f.rate, f.rate, 2 * f.rate]
    assert s1.node_on == [True] * 4
    assert s1.placed == {(3, 1)}
    assert s1.resource_used[3] == [6]
    assert s1.vnf_load == {(3, 1): f.rate}
    assert s1.node_ingress_load[3] == f.rate
    # the input state is untouched
    assert not any(s0.node_on) and s0.placed == set()


def test_commit_is_transactional():
    g, cat = one_server_graph(resources=4), simple_catalog()
    s0 = init_state(g)
    before = s0.copy()
    with pytest.raises(ValidationFailed) as err:
        commit(s0, g, VIA_SERVER, flow(chain=(1,)), cat)
    assert "C5" in err.value.report.tags()
    assert s0 == before


def test_link_capacity_violation_tagged():
    g, cat = one_server_graph(link_cap=50 * MBPS), simple_catalog()
    rep = validate_assignment(g, cat, init_state(g), flow(chain=(1,)), VIA_SERVER)
    assert rep.tags() == {"C11"}
    assert {v.ids for v in rep.violations} == {(0,), (1,), (2,)}


def test_vnf_ingress_violation_tagged():
    g, cat = one_server_graph(), simple_catalog(capacity=50 * MBPS)
    rep = validate_assignment(g, cat, init_state(g), flow(chain=(1,)), VIA_SERVER)
    assert rep.tags() == {"C7"}


def test_function_node_ingress_violation():
    nodes = [Node(0, NodeKind.SDN_SWITCH, 1.0), Node(1, NodeKind.SDN_SWITCH, 1.0),
             Node(2, NodeKind.FUNCTION_NODE, 10.0, 0.5, 50 * MBPS, supported_nfs={0})]
    g = build_graph(nodes, [Link(0, 0, 1, GBPS, 1.0), Link(1, 0, 2, GBPS, 1.0)])
    a = Assignment(0, ((1, 2),), ((1,), (1, 0)))
    rep = validate_assignment(g, simple_catalog(), init_state(g), flow(dst=1), a)
    assert rep.tags() == {"C6"}


def test_structure_violations():
    g, cat = one_server_graph(), simple_catalog()
    f = flow(chain=(1,))
    s = init_state(g)
    assert validate_assignment(g, cat, s, f, Assignment(0, (), ((0, 1),))).tags() == {"C4"}
    assert validate_assignment(g, cat, s, f, Assignment(0, ((1, 1),), ((0,), (1,)))).tags() == {"C3"}
    assert validate_assignment(g, cat, s, f, Assignment(0, ((1, 3),), ((0,), (2, 1)))).tags() == {"C8"}
    assert validate_assignment(g, cat, s, f, Assignment(0, ((1, 3),), ((0, 2), (2,)))).tags() == {"C10"}
    assert validate_assignment(g, cat, s, f, Assignment(0, ((1, 3),), ((0, 2),))).tags() == {"C9"}


def test_shared_function_node_counts_ingress_once():
    nodes = [Node(0, NodeKind.SDN_SWITCH, 1.0), Node(1, NodeKind.SDN_SWITCH, 1.0),
             Node(2, NodeKind.FUNCTION_NODE, 10.0, 0.5, 150 * MBPS, supported_nfs={0, 1})]
    g = build_graph(nodes, [Link(0, 0, 1, GBPS, 1.0), Link(1, 0, 2, GBPS, 1.0)])
    a = Assignment(0, ((1, 2), (2, 2)), ((1,), (), (1, 0)))
    f = flow(dst=1, chain=(0, 1))
    s = commit(init_state(g), g, a, f, simple_catalog())
    assert s.node_ingress_load[2] == f.rate
    assert a.zeta(g) == (True, False)


def test_single_checks():
    g, cat = one_server_graph(resources=8), simple_catalog(capacity=GBPS)
    s = init_state(g)
    assert check_c5(s, 3, cat[1])
    s = preplace(s, cat, 3, 1)
    assert not check_c5(s, 3, cat[1])          # 6 + 6 > 8
    assert check_c5(s, 3, cat[0])
    assert check_c6(s, 3, 10 * GBPS) and not check_c6(s, 3, 10 * GBPS + 1)
    assert check_c6(s, 3, 10 * GBPS + 1, zeta=False)
    assert check_c7(s, 3, cat[1], GBPS) and not check_c7(s, 3, cat[1], GBPS + 1)
    assert check_c11(s, 2, 10 * GBPS)          # attachment link switched on by preplace
    assert not check_c11(s, 0, 1)              # still off


def test_preplace_registers_instance():
    g, cat = one_server_graph(), simple_catalog()
    s = preplace(init_state(g), cat, 3, 0)
    assert s.placed == {(3, 0)} and s.resource_used[3] == [2]
    assert s.node_on[3] and s.node_on[1] and s.link_on[2]
    with pytest.raises(ValueError):
        preplace(s, cat, 0, 0)
    with pytest.raises(ValidationFailed):
        preplace(init_state(one_server_graph(resources=1)), cat, 3, 0)


def test_preplaced_instance_reused_without_extra_resources():
    g, cat = one_server_graph(resources=6), simple_catalog()
    s = preplace(init_state(g), cat, 3, 1)
    s = commit(s, g, VIA_SERVER, flow(chain=(1,)), cat)
    assert s.resource_used[3] == [6]


def test_validate_solution_detects_double_assignment():
    g, cat = one_server_graph(), simple_catalog()
    f = flow(chain=(1,))
    rep = validate_solution(g, cat, [f], [VIA_SERVER, VIA_SERVER])
    assert "C4" in rep.tags()


def test_validate_solution_checks_supplied_flags():
    g, cat = one_server_graph(), simple_catalog()
    f = flow(chain=(1,))
    s = replay(g, cat, [f], [VIA_SERVER])
    assert validate_solution(g, cat, [f], [VIA_SERVER], state=s).ok
    s.link_on[0] = False
    assert "C11" in validate_solution(g, cat, [f], [VIA_SERVER], state=s).tags()
    s = replay(g, cat, [f], [VIA_SERVER])
    s.node_on[0] = False
    assert "C1" in validate_solution(g, cat, [f], [VIA_SERVER], state=s).tags()
    s = replay(g, cat, [f], [VIA_SERVER])
    s.placed = set()
    assert "C3" in validate_solution(g, cat, [f], [VIA_SERVER], state=s).tags()


def test_on_node_without_link_is_flagged():
    g, cat = line_graph(3), simple_catalog()
    s = init_state(g)
    s.node_on[1] = True
    rep = validate_solution(g, cat, [], [], state=s)
    assert rep.tags() == {"C2"}


def test_report_text_round_trip():
    rep = ValidationReport()
    rep.add("C11", 4)
    rep.add("C7", 3, 1)
    assert ValidationReport.from_text(rep.to_text()).to_text() == rep.to_text()


def test_walk_nodes():
    g = line_graph(4)
    assert walk_nodes(g, 0, (0, 1, 2)) == [0, 1, 2, 3]
    assert walk_nodes(g, 0, (1,)) is None
    assert walk_nodes(g, 0, (9,)) is None


@settings(max_examples=150, deadline=None)
@given(st.integers(0, 10**6))
def test_commit_sequence_matches_recomputation(seed):
    rng = random.Random(seed)
    g, cat, flows, assigns = random_commit_sequence(rng)
    s = init_state(g)
    for f, a in zip(flows, assigns):
        s = commit(s, g, a, f, cat)
    assert state_matches(s, recompute_usage(g, cat, flows, assigns)) == []
    assert state_matches(replay(g, cat, flows, assigns), recompute_usage(g, cat, flows, assigns)) == []
    assert validate_solution(g, cat, flows, assigns, state=s).ok
