import logging
from typing import Optional, Tuple

import numpy as np

from candidate_graph import CandidateGraph, build_candidate_graph
from model import CableCatalog, EdgeMatrix, EdgeRow, Instance
from stages.base import BaseStage, StageResult
from utils import count_crossings, forest_graph, is_spanning_forest, orient_forest


logger = logging.getLogger(__name__)


class CapacityInfeasible(Exception):
    def __init__(self, value='The largest cable cannot carry a single turbine'):
        self.value = value

    def __str__(self):
        return repr(self.value)


class CapacityExceeded(Exception):
    def __init__(self, value='Downstream count exceeds the largest cable capacity'):
        self.value = value

    def __str__(self):
        return repr(self.value)


def esau_williams(g: CandidateGraph, catalog: CableCatalog) -> EdgeMatrix:
    """
    Capacitated spanning forest by Esau-Williams. Every turbine starts gated to its nearest
    substation; an undirected turbine-turbine candidate edge [i, j] joining two components has
    tradeoff d_ij - (larger of the two gate lengths), and the most negative tradeoff is merged
    first (ties: shorter edge, then lower ids) while the merged size stays within Q.
    The merged component keeps the shorter gate.
    """
    instance = g.instance
    q_max = catalog.max_capacity
    if q_max < 1:
        raise CapacityInfeasible()
    n_s, n_nodes = instance.n_substations, instance.n_nodes
    distances = g.distances_km

    # Component bookkeeping is indexed by node id; substation slots stay unused.
    component = np.arange(n_nodes + 1)
    size = np.ones(n_nodes + 1, dtype=int)
    gate_length = np.full(n_nodes + 1, np.inf)
    gate_substation = np.zeros(n_nodes + 1, dtype=int)
    gate_turbine = np.arange(n_nodes + 1)
    for t in instance.turbine_ids:
        nearest = int(np.argmin(distances[t - 1, :n_s]))
        gate_length[t] = distances[t - 1, nearest]
        gate_substation[t] = nearest + 1

    edges = [(a, b) for a, b in g.edges() if a > n_s and b > n_s]
    ends_a = np.array([a for a, _ in edges], dtype=int)
    ends_b = np.array([b for _, b in edges], dtype=int)
    lengths = np.array([distances[a - 1, b - 1] for a, b in edges], dtype=float)
    links = []

    while len(edges) > 0:
        comp_a, comp_b = component[ends_a], component[ends_b]
        tradeoff = lengths - np.maximum(gate_length[comp_a], gate_length[comp_b])
        usable = (comp_a != comp_b) & (size[comp_a] + size[comp_b] <= q_max) & (tradeoff < 0)
        if not usable.any():
            break
        candidates = np.flatnonzero(usable)
        order = np.lexsort((ends_b[candidates], ends_a[candidates], lengths[candidates], tradeoff[candidates]))
        best = candidates[order[0]]
        a, b = int(ends_a[best]), int(ends_b[best])
        keep, absorb = int(component[a]), int(component[b])
        if gate_length[absorb] < gate_length[keep]:
            gate_length[keep] = gate_length[absorb]
            gate_substation[keep] = gate_substation[absorb]
            gate_turbine[keep] = gate_turbine[absorb]
        component[component == absorb] = keep
        size[keep] += size[absorb]
        links.append((a, b))
        logger.debug(f'Esau-Williams merged {a}-{b} (tradeoff {tradeoff[best]:.4f}), component size {size[keep]}.')

    roots = sorted({int(component[t]) for t in instance.turbine_ids})
    gates = [(int(gate_substation[root]), int(gate_turbine[root])) for root in roots]
    pairs = sorted(gates + links, key=lambda pair: (min(pair), max(pair)))
    return EdgeMatrix.from_pairs(pairs, instance)


def assign_cables(tree: EdgeMatrix, g: CandidateGraph, catalog: CableCatalog) -> EdgeMatrix:
    """
    Orients the forest from the substations (depth first, children by ascending id) and gives
    every edge its downstream turbine count and the cheapest cable able to carry it.
    """
    instance = g.instance
    assert is_spanning_forest(tree.pairs(), instance), 'cable assignment needs a spanning forest'
    graph = forest_graph(tree.pairs(), instance.node_ids)
    oriented, below = orient_forest(graph, instance.substation_ids)
    rows = []
    for upstream, downstream in oriented:
        k = below[downstream]
        cable = catalog.cheapest_cable_for(k)
        if cable is None:
            raise CapacityExceeded(f'Edge {upstream}-{downstream} carries {k} turbines, Q={catalog.max_capacity}.')
        rows.append(EdgeRow(upstream, downstream, g.length(upstream, downstream), k, cable))
    return EdgeMatrix(rows)


def run_tsh(instance: Instance, g: Optional[CandidateGraph] = None) -> Tuple[EdgeMatrix, int]:
    g = build_candidate_graph(instance) if g is None else g
    tree = assign_cables(esau_williams(g, instance.catalog), g, instance.catalog)
    return tree, count_crossings(tree.pairs(), instance)


class TwoStepsHeuristic(BaseStage):
    name = 'tsh'

    def run(self, tree: Optional[EdgeMatrix] = None) -> StageResult:
        tree, crossings = run_tsh(self.instance, self.graph)
        cost = tree.total_cost(self.instance.catalog)
        self.logger.info(f'TSH built {len(tree)} edges, cost {cost:.4f}, {crossings} crossing(s).')
        return StageResult(self.name, tree, cost, crossings)
