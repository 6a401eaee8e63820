"""
Exact references for small problems: exhaustive design search and classic negative cycle
cancelling on linear-cost flow networks. Both exist to check the heuristics against.
"""
from dataclasses import dataclass
import logging
import math
from typing import Dict, List, Optional, Tuple

import numpy as np

from candidate_graph import CandidateGraph, build_candidate_graph
from constants import ORACLE_MAX_TURBINES
from geometry import crossing_matrix, segments_for
from model import EdgeMatrix, Instance
from stages.nccrh import ArcKind, ResidualNetwork, find_negative_cycles
from stages.tsh import assign_cables


logger = logging.getLogger(__name__)

COST_TIE_TOL = 1e-9


class TooLarge(Exception):
    def __init__(self, value=f'Exhaustive search is limited to {ORACLE_MAX_TURBINES} turbines'):
        self.value = value

    def __str__(self):
        return repr(self.value)


class InfeasibleInitial(Exception):
    def __init__(self, value='Initial flow violates conservation or capacities'):
        self.value = value

    def __str__(self):
        return repr(self.value)


class IterationLimit(Exception):
    def __init__(self, value='Cycle cancelling did not converge within its iteration bound'):
        self.value = value

    def __str__(self):
        return repr(self.value)


def exact_design(instance: Instance, g: Optional[CandidateGraph] = None) -> Tuple[float, EdgeMatrix]:
    """
    Branch and bound over parent choices: turbines in ascending id pick a neighbour (shortest
    first) so that no cycle and no crossing appears; complete choices are checked for capacity
    and costed. Ties go to the lexicographically smaller sorted edge list.

    :return: (optimal cost, optimal design with cables assigned)
    """
    if instance.n_turbines > ORACLE_MAX_TURBINES:
        raise TooLarge(f'{instance.n_turbines} turbines, exhaustive search stops at {ORACLE_MAX_TURBINES}.')
    g = build_candidate_graph(instance) if g is None else g
    catalog = instance.catalog
    q_max = catalog.max_capacity
    w_min = float(catalog.unit_costs[0])
    turbines = instance.turbine_ids

    edges = g.edges()
    edge_id = {edge: idx for idx, edge in enumerate(edges)}
    crossing = crossing_matrix(segments_for(edges, instance.coordinates), segments_for(edges, instance.coordinates))
    options = {t: sorted(g.neighbors(t), key=lambda p: (g.length(t, p), p)) for t in turbines}
    cheapest = [g.length(t, options[t][0]) * w_min for t in turbines]
    remaining = np.concatenate([np.cumsum(cheapest[::-1])[::-1], [0.0]])

    parent: Dict[int, int] = {}
    chosen: List[int] = []
    best = {'cost': math.inf, 'keys': None}

    def closes_cycle(t, p):
        while not instance.is_substation(p):
            if p == t:
                return True
            if p not in parent:
                return False
            p = parent[p]
        return False

    def evaluate():
        load = {t: 0 for t in turbines}
        for t in turbines:
            node = t
            while not instance.is_substation(node):
                load[node] += 1
                node = parent[node]
        if max(load.values()) > q_max:
            return
        cost = sum(catalog.step_cost(g.length(t, parent[t]), load[t]) for t in turbines)
        keys = sorted((min(t, parent[t]), max(t, parent[t])) for t in turbines)
        if cost < best['cost'] - COST_TIE_TOL or (abs(cost - best['cost']) <= COST_TIE_TOL and keys < best['keys']):
            best['cost'], best['keys'] = cost, keys

    def search(depth, partial):
        if depth == len(turbines):
            evaluate()
            return
        t = turbines[depth]
        for p in options[t]:
            step = g.length(t, p) * w_min
            if partial + step + remaining[depth + 1] > best['cost'] + COST_TIE_TOL:
                break
            if closes_cycle(t, p):
                continue
            e = edge_id[(min(t, p), max(t, p))]
            if chosen and crossing[e, chosen].any():
                continue
            parent[t] = p
            chosen.append(e)
            search(depth + 1, partial + step)
            chosen.pop()
            del parent[t]

    search(0, 0.0)
    if best['keys'] is None:
        raise ValueError(f'No feasible design among the candidate edges of {instance.name}.')
    tree = assign_cables(EdgeMatrix.from_pairs(best['keys'], instance), g, catalog)
    logger.debug(f'Exact design for {instance.name}: cost {best["cost"]:.6f}.')
    return tree.total_cost(catalog), tree


@dataclass(eq=False, frozen=True)
class McfProblem:
    """
    Linear-cost flow problem on nodes 1..n. demands[i - 1] is b_i, negative at sources; the
    balance of node i is inflow minus outflow.
    """
    demands: np.ndarray
    tails: np.ndarray
    heads: np.ndarray
    capacities: np.ndarray
    unit_costs: np.ndarray
    lengths: Optional[np.ndarray] = None

    def __post_init__(self):
        for name in ('demands', 'tails', 'heads', 'capacities', 'unit_costs'):
            object.__setattr__(self, name, np.asarray(getattr(self, name)))
        assert self.demands.sum() == 0, 'demands must balance'
        assert np.all(self.capacities >= 0), 'capacities must be non-negative'

    @property
    def n_nodes(self) -> int:
        return len(self.demands)

    @property
    def n_arcs(self) -> int:
        return len(self.tails)

    def balance(self, flow: np.ndarray) -> np.ndarray:
        balance = np.zeros(self.n_nodes + 1)
        np.add.at(balance, self.heads, flow)
        np.add.at(balance, self.tails, -flow)
        return balance[1:]

    def is_feasible(self, flow: np.ndarray) -> bool:
        flow = np.asarray(flow)
        within = np.all(flow >= 0) and np.all(flow <= self.capacities)
        return bool(within and np.allclose(self.balance(flow), self.demands))

    def cost(self, flow: np.ndarray) -> float:
        return float(np.dot(self.unit_costs, flow))


def classic_residual_network(problem: McfProblem) -> ResidualNetwork:
    m = problem.n_arcs
    refs = np.arange(m)
    return ResidualNetwork.assemble(
        problem.n_nodes,
        tails=np.concatenate([problem.tails, problem.heads]),
        heads=np.concatenate([problem.heads, problem.tails]),
        kinds=np.concatenate([np.full(m, ArcKind.FORWARD), np.full(m, ArcKind.INVERSE)]),
        refs=np.concatenate([refs, refs]),
        inverse=np.concatenate([refs + m, refs]),
    )


def classic_ncc(problem: McfProblem, initial: np.ndarray) -> np.ndarray:
    """
    Cancels negative cycles of the residual graph (forward arcs with spare capacity at cost p,
    backward arcs with positive flow at cost -p) by the smallest residual capacity on the cycle.
    """
    flow = np.array(initial, dtype=int)
    if not problem.is_feasible(flow):
        raise InfeasibleInitial()
    net = classic_residual_network(problem)
    m = problem.n_arcs
    bound = max(1, math.ceil(m * max(1.0, float(np.max(np.abs(problem.unit_costs)))) * max(1, int(np.max(problem.capacities)))))
    for iteration in range(bound + 1):
        residual = np.concatenate([problem.capacities - flow, flow])
        costs = np.zeros(len(net))
        costs[:2 * m] = np.concatenate([problem.unit_costs, -problem.unit_costs])
        costs[:2 * m][residual <= 0] = math.inf
        cycles = find_negative_cycles(net, costs, non_backtracking=False)
        if not cycles:
            logger.debug(f'Cycle cancelling converged after {iteration} push(es).')
            return flow
        cycle = cycles[0]
        delta = min(residual[a] for a in cycle.arcs)
        for kind, ref in zip(cycle.kinds, cycle.refs):
            flow[ref] += delta if kind == ArcKind.FORWARD else -delta
    raise IterationLimit(f'No convergence within {bound} pushes.')
