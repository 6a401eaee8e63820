import itertools
import math

import numpy as np
import pytest

from candidate_graph import build_candidate_graph, forward_arcs
from checker import check_design
from model import catalog_from_pairs, generate_random_instance
from oracle import InfeasibleInitial, McfProblem, TooLarge, classic_ncc, exact_design
from stages.ccrh import repair_crossings
from stages.nccrh import flow_from_tree, refine
from stages.tsh import run_tsh


def test_exact_chain(chain_instance):
    cost, tree = exact_design(chain_instance)
    assert cost == pytest.approx(2.0)
    assert sorted(tree.keys()) == [(1, 2), (2, 3)]


def test_exact_offset_pair(offset_pair_instance):
    cost, tree = exact_design(offset_pair_instance)
    assert cost == pytest.approx(1.1)
    assert tree.pairs() == [(1, 2), (2, 3)]


def test_exact_square_is_a_star(square_instance):
    cost, tree = exact_design(square_instance)
    assert cost == pytest.approx(4 * math.sqrt(2))
    assert sorted(tree.keys()) == [(1, 2), (1, 3), (1, 4), (1, 5)]


def test_exact_design_size_limit():
    instance = generate_random_instance(0, n_turbines=10)
    with pytest.raises(TooLarge):
        exact_design(instance)


def _stage_costs(instance):
    graph = build_candidate_graph(instance)
    tree, crossings = run_tsh(instance, graph)
    costs = {}
    if crossings == 0:
        costs['tsh'] = tree.total_cost(instance.catalog)
    else:
        outcome = repair_crossings(tree, instance, graph)
        if outcome.infeasible:
            return costs
        tree = outcome.tree
        costs['ccrh'] = tree.total_cost(instance.catalog)
    _, refined, _ = refine(flow_from_tree(tree, forward_arcs(graph)), instance, graph)
    costs['nccrh'] = refined.total_cost(instance.catalog)
    return costs


def _tiny_instance(seed, n_turbines):
    catalog = catalog_from_pairs([(2, 1.0), (3, 1.3), (5, 2.0)])
    return generate_random_instance(seed, n_turbines=n_turbines, area=(3000.0, 3000.0), catalog=catalog,
                                    min_separation=300.0)


def _check_bound(seed, n_turbines):
    instance = _tiny_instance(seed, n_turbines)
    optimum, tree = exact_design(instance)
    assert check_design(tree, instance).feasible
    assert optimum == pytest.approx(check_design(tree, instance).total_cost)
    for cost in _stage_costs(instance).values():
        assert optimum <= cost + 1e-9
    return optimum


@pytest.mark.parametrize('seed', range(6))
def test_exact_design_bounds_every_stage(seed):
    _check_bound(seed, 4 + seed % 2)


@pytest.mark.slow
@pytest.mark.parametrize('seed', range(50))
def test_exact_design_bounds_every_stage_full(seed):
    _check_bound(500 + seed, 5 + seed % 3)


@pytest.mark.slow
def test_refining_often_reaches_the_optimum():
    hits = 0
    seeds = range(700, 750)
    for seed in seeds:
        instance = _tiny_instance(seed, 4 + seed % 3)
        optimum, _ = exact_design(instance)
        refined = _stage_costs(instance).get('nccrh')
        if refined is not None and refined <= optimum * (1 + 1e-6):
            hits += 1
    assert hits >= 0.3 * len(seeds)


def test_classic_ncc_reroutes_flow():
    problem = McfProblem(demands=[-2, 0, 2], tails=[1, 1, 2], heads=[3, 2, 3], capacities=[2, 2, 2],
                         unit_costs=[5, 1, 1])
    flow = classic_ncc(problem, [2, 0, 0])
    assert flow.tolist() == [0, 2, 2]
    assert problem.cost(flow) == 4


def test_classic_ncc_two_arc_cycle():
    # Arcs 1 -> 2 and 2 -> 1 are distinct arcs; sending flow around them pays off.
    problem = McfProblem(demands=[0, 0], tails=[1, 2], heads=[2, 1], capacities=[3, 3], unit_costs=[1, -4])
    flow = classic_ncc(problem, [0, 0])
    assert flow.tolist() == [3, 3]


def test_classic_ncc_rejects_infeasible_start():
    problem = McfProblem(demands=[-2, 0, 2], tails=[1, 1, 2], heads=[3, 2, 3], capacities=[2, 2, 2],
                         unit_costs=[5, 1, 1])
    with pytest.raises(InfeasibleInitial):
        classic_ncc(problem, [1, 0, 0])
    with pytest.raises(InfeasibleInitial):
        classic_ncc(problem, [3, -1, -1])


def _random_problem(rng):
    n_nodes = int(rng.integers(3, 7))
    pairs = [(a, b) for a in range(1, n_nodes + 1) for b in range(1, n_nodes + 1) if a != b]
    chosen = rng.choice(len(pairs), size=min(6, len(pairs)), replace=False)
    tails = np.array([pairs[i][0] for i in chosen])
    heads = np.array([pairs[i][1] for i in chosen])
    capacities = rng.integers(1, 5, size=len(chosen))
    unit_costs = rng.integers(-3, 10, size=len(chosen))
    initial = np.array([rng.integers(0, c + 1) for c in capacities])
    balance = np.zeros(n_nodes + 1, dtype=int)
    np.add.at(balance, heads, initial)
    np.add.at(balance, tails, -initial)
    problem = McfProblem(demands=balance[1:], tails=tails, heads=heads, capacities=capacities,
                         unit_costs=unit_costs)
    return problem, initial


def _enumerated_optimum(problem):
    grid = np.array(list(itertools.product(*[range(int(c) + 1) for c in problem.capacities])))
    incidence = np.zeros((problem.n_nodes, problem.n_arcs), dtype=int)
    for arc, (tail, head) in enumerate(zip(problem.tails, problem.heads)):
        incidence[head - 1, arc] += 1
        incidence[tail - 1, arc] -= 1
    feasible = np.all(grid @ incidence.T == problem.demands, axis=1)
    return int(np.min(grid[feasible] @ problem.unit_costs))


def _check_classic(count, seed):
    rng = np.random.default_rng(seed)
    for _ in range(count):
        problem, initial = _random_problem(rng)
        flow = classic_ncc(problem, initial)
        assert problem.is_feasible(flow)
        assert problem.cost(flow) == _enumerated_optimum(problem)


def test_classic_ncc_matches_enumeration():
    _check_classic(25, seed=4)


@pytest.mark.slow
def test_classic_ncc_matches_enumeration_full():
    _check_classic(100, seed=5)
