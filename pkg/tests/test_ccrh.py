import pytest

from candidate_graph import build_candidate_graph
from checker import check_design
from model import EdgeMatrix, catalog_from_pairs, generate_random_instance
from stages.ccrh import (
    CrossingsRepairHeuristic, candidate_edges_for, crossing_list, orphan_nodes, repair_crossings, satisfies_capacity,
)
from stages.tsh import assign_cables, run_tsh
from utils import count_crossings
from conftest import make_instance


def _assigned(instance, pairs, graph=None):
    graph = build_candidate_graph(instance) if graph is None else graph
    return assign_cables(EdgeMatrix.from_pairs(pairs, instance), graph, instance.catalog)


@pytest.fixture
def repairable_instance():
    # Edge 1-4 runs through the middle of 2-3; node 3 can hang off the substation instead.
    return make_instance([(0.0, 0.0)], [(-1000.0, 2000.0), (1000.0, 2000.0), (0.0, 4000.0)], cables=((3, 1.0),))


def test_crossing_list(repairable_instance):
    tree = _assigned(repairable_instance, [(1, 2), (2, 3), (1, 4)])
    assert tree.pairs() == [(1, 2), (2, 3), (1, 4)]
    rows = crossing_list(tree, repairable_instance)
    assert [(row.edge, row.crossers) for row in rows] == [(1, [2]), (2, [1])]
    assert rows[0].elimination_order == [1, 2]


def test_orphans_and_candidates(repairable_instance):
    graph = build_candidate_graph(repairable_instance)
    tree = _assigned(repairable_instance, [(1, 2), (2, 3), (1, 4)], graph)
    pruned = tree.without(1)
    orphans = orphan_nodes(pruned, repairable_instance)
    assert orphans == {3}
    # 2-3 would cross 1-4 again; 1-3 and 3-4 have equal length and are ordered by ids.
    assert candidate_edges_for(orphans, pruned, graph) == [(1, 3), (3, 4)]


def test_single_swap_repair(repairable_instance):
    tree = _assigned(repairable_instance, [(1, 2), (2, 3), (1, 4)])
    outcome = repair_crossings(tree, repairable_instance)
    assert not outcome.infeasible
    assert outcome.swaps_performed == [((2, 3), (1, 3))]
    assert count_crossings(outcome.tree.pairs(), repairable_instance) == 0
    assert check_design(outcome.tree, repairable_instance).feasible


def test_blocked_repair_is_infeasible(blocked_instance):
    tree = _assigned(blocked_instance, [(1, 2), (2, 3), (1, 4), (4, 5), (1, 6), (6, 7)])
    assert count_crossings(tree.pairs(), blocked_instance) == 1
    outcome = repair_crossings(tree, blocked_instance)
    assert outcome.infeasible
    assert outcome.swaps_performed == []
    assert outcome.tree.keys() == tree.keys()


def test_stage_reports_infeasibility(blocked_instance):
    graph = build_candidate_graph(blocked_instance)
    tree = _assigned(blocked_instance, [(1, 2), (2, 3), (1, 4), (4, 5), (1, 6), (6, 7)], graph)
    result = CrossingsRepairHeuristic(blocked_instance, graph).run_timed(tree)
    assert result.infeasible and not result.feasible
    assert result.display == 'Inf-1cr.'
    assert result.extra['swaps'] == []


def test_crossing_free_tree_is_untouched(chain_instance, chain_graph):
    tree, _ = run_tsh(chain_instance, chain_graph)
    outcome = repair_crossings(tree, chain_instance, chain_graph)
    assert not outcome.infeasible
    assert outcome.swaps_performed == []
    assert outcome.tree is tree


def test_satisfies_capacity(chain_instance):
    assert satisfies_capacity([(1, 2), (2, 3)], chain_instance)
    tight = make_instance([(0.0, 0.0)], [(0.0, 1000.0), (0.0, 2000.0)], cables=((1, 1.0),))
    assert not satisfies_capacity([(1, 2), (2, 3)], tight)


@pytest.mark.parametrize('seed', range(10))
def test_successful_repairs_are_feasible(seed):
    catalog = catalog_from_pairs([(5, 0.41), (10, 0.61)])
    instance = generate_random_instance(100 + seed, n_turbines=40, n_substations=1 + seed % 2, catalog=catalog)
    graph = build_candidate_graph(instance)
    tree, crossings = run_tsh(instance, graph)
    outcome = repair_crossings(tree, instance, graph)
    if crossings == 0:
        assert outcome.swaps_performed == []
    if not outcome.infeasible:
        report = check_design(outcome.tree, instance)
        assert report.feasible
        assert outcome.tree.total_cost(catalog) == pytest.approx(report.total_cost, rel=1e-9)
