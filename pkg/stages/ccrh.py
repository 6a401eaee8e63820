from dataclasses import dataclass, field
import logging
from typing import List, Optional, Sequence, Set, Tuple

import networkx as nx

from candidate_graph import CandidateGraph, build_candidate_graph
from geometry import all_crossings, crossing_matrix, segments_for
from model import EdgeMatrix, Instance
from stages.base import BaseStage, StageResult
from stages.tsh import assign_cables
from utils import forest_graph, is_spanning_forest, orient_forest


logger = logging.getLogger(__name__)

Edge = Tuple[int, int]


@dataclass
class CrossingRow:
    edge: int
    crossers: List[int]

    @property
    def elimination_order(self) -> List[int]:
        return [self.edge] + self.crossers


@dataclass
class RepairOutcome:
    tree: EdgeMatrix
    infeasible: bool
    swaps_performed: List[Tuple[Edge, Edge]] = field(default_factory=list)


def crossing_list(tree: EdgeMatrix, instance: Instance) -> List[CrossingRow]:
    """
    One row per edge involved in a crossing, its crossers ordered by how many crossings each
    of them has (most first, then edge index). Rows are sorted by crosser count, non-increasing.
    """
    pairs = all_crossings(segments_for(tree.pairs(), instance.coordinates))
    crossers = {}
    for i, j in pairs:
        crossers.setdefault(i, []).append(j)
        crossers.setdefault(j, []).append(i)
    multiplicity = {edge: len(others) for edge, others in crossers.items()}
    rows = [CrossingRow(edge, sorted(others, key=lambda e: (-multiplicity[e], e)))
            for edge, others in sorted(crossers.items())]
    return sorted(rows, key=lambda row: -len(row.crossers))


def orphan_nodes(pruned: EdgeMatrix, instance: Instance) -> Set[int]:
    graph = forest_graph(pruned.pairs(), instance.node_ids)
    reached = set()
    for s in instance.substation_ids:
        reached |= nx.node_connected_component(graph, s)
    return set(instance.node_ids) - reached


def candidate_edges_for(orphans: Set[int], pruned_tree: EdgeMatrix, g: CandidateGraph) -> List[Edge]:
    """
    Candidate-graph edges with exactly one endpoint among the orphans that cross no edge of the
    pruned tree, shortest first (ties by node ids).
    """
    edges = [(a, b) for a, b in g.edges() if (a in orphans) != (b in orphans)]
    if len(edges) == 0:
        return []
    coordinates = g.instance.coordinates
    blocked = crossing_matrix(segments_for(edges, coordinates), segments_for(pruned_tree.pairs(), coordinates))
    free = [edge for edge, hit in zip(edges, blocked.any(axis=1)) if not hit]
    return sorted(free, key=lambda edge: (g.length(*edge), edge))


def satisfies_capacity(pairs: Sequence[Edge], instance: Instance) -> bool:
    graph = forest_graph(pairs, instance.node_ids)
    _, below = orient_forest(graph, instance.substation_ids)
    q_max = instance.catalog.max_capacity
    return all(below.get(t, 0) <= q_max for t in instance.turbine_ids)


def repair_crossings(tree: EdgeMatrix, instance: Instance, g: Optional[CandidateGraph] = None) -> RepairOutcome:
    """
    Swaps crossing edges out for non-crossing candidate edges, one at a time, as long as the
    trial forest stays spanning and within cable capacity.

    :param tree: design satisfying the tree and capacity constraints
    :param instance: problem instance
    :param g: candidate graph; built from the instance when omitted
    :return: RepairOutcome, infeasible when every row of the crossing list is exhausted
    """
    g = build_candidate_graph(instance) if g is None else g
    swaps = []
    while True:
        rows = crossing_list(tree, instance)
        if len(rows) == 0:
            return RepairOutcome(tree, False, swaps)
        committed = None
        for row in rows:
            for eliminate in row.elimination_order:
                committed = _try_eliminate(tree, eliminate, instance, g)
                if committed is not None:
                    break
            if committed is not None:
                break
        if committed is None:
            logger.info(f'Crossing repair exhausted {len(rows)} row(s) after {len(swaps)} swap(s).')
            return RepairOutcome(tree, True, swaps)
        removed, added, tree = committed
        swaps.append((removed, added))
        logger.debug(f'Swapped {removed} for {added}.')


def _try_eliminate(tree: EdgeMatrix, eliminate: int, instance: Instance, g: CandidateGraph):
    removed = tree[eliminate].key
    pruned = tree.without(eliminate)
    orphans = orphan_nodes(pruned, instance)
    for candidate in candidate_edges_for(orphans, pruned, g):
        trial = pruned.pairs() + [candidate]
        if is_spanning_forest(trial, instance) and satisfies_capacity(trial, instance):
            repaired = assign_cables(EdgeMatrix.from_pairs(trial, instance), g, instance.catalog)
            return removed, candidate, repaired
    return None


class CrossingsRepairHeuristic(BaseStage):
    name = 'ccrh'

    def run(self, tree: Optional[EdgeMatrix]) -> StageResult:
        outcome = repair_crossings(tree, self.instance, self.graph)
        result = self.result_for(outcome.tree, iterations=len(outcome.swaps_performed),
                                 infeasible=outcome.infeasible)
        result.extra['swaps'] = [list(map(list, swap)) for swap in outcome.swaps_performed]
        if outcome.infeasible:
            self.logger.error(f'CCRH could not remove all crossings ({result.crossings} left).')
        else:
            self.logger.info(f'CCRH removed all crossings with {len(outcome.swaps_performed)} swap(s), '
                             f'cost {result.cost:.4f}.')
        return result

    def on_timeout(self, tree: Optional[EdgeMatrix]) -> StageResult:
        return self.result_for(tree, infeasible=True, timed_out=True)
