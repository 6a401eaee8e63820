from dataclasses import dataclass, field
import logging
from typing import Dict, List, Tuple

import numpy as np
from scipy.spatial.distance import cdist

from constants import METERS_PER_KM
from model import Instance


logger = logging.getLogger(__name__)


class ArcMissing(Exception):
    def __init__(self, value='Edge is not part of the candidate graph'):
        self.value = value

    def __str__(self):
        return repr(self.value)


@dataclass(eq=False, frozen=True)
class CandidateGraph:
    """
    Truncated directed candidate graph. Turbines point to their nearest turbines (union of both
    directions) and to every substation. Substations have no outgoing arcs.
    """
    instance: Instance
    arcs: Tuple[Tuple[int, int], ...]
    lengths: np.ndarray
    distances_km: np.ndarray
    neighbor_truncation: int
    truncation_clamped: bool = False
    arc_index: Dict[Tuple[int, int], int] = field(init=False, repr=False)
    out_arcs: Dict[int, List[int]] = field(init=False, repr=False)
    in_arcs: Dict[int, List[int]] = field(init=False, repr=False)

    def __post_init__(self):
        arc_index = {arc: idx for idx, arc in enumerate(self.arcs)}
        out_arcs = {node: [] for node in self.instance.node_ids}
        in_arcs = {node: [] for node in self.instance.node_ids}
        for idx, (tail, head) in enumerate(self.arcs):
            out_arcs[tail].append(idx)
            in_arcs[head].append(idx)
        object.__setattr__(self, 'arc_index', arc_index)
        object.__setattr__(self, 'out_arcs', out_arcs)
        object.__setattr__(self, 'in_arcs', in_arcs)

    def __len__(self):
        return len(self.arcs)

    @property
    def nodes(self) -> List[int]:
        return self.instance.node_ids

    def has_arc(self, tail: int, head: int) -> bool:
        return (tail, head) in self.arc_index

    def length(self, a: int, b: int) -> float:
        return float(self.distances_km[a - 1, b - 1])

    def successors(self, node: int) -> List[int]:
        return [self.arcs[idx][1] for idx in self.out_arcs[node]]

    def edges(self) -> List[Tuple[int, int]]:
        """
        Undirected view: every adjacency once as (lower id, higher id), sorted.
        """
        return sorted({(min(a, b), max(a, b)) for a, b in self.arcs})

    def neighbors(self, node: int) -> List[int]:
        tails = [self.arcs[idx][0] for idx in self.in_arcs[node]]
        return sorted(set(self.successors(node)) | set(tails))


@dataclass(eq=False, frozen=True)
class ForwardArcSet:
    """
    One arc per undirected candidate adjacency: lower id to higher id between turbines,
    turbine to substation otherwise. The inverse set is the same arrays with tails and heads swapped.
    """
    tails: np.ndarray
    heads: np.ndarray
    lengths: np.ndarray
    index: Dict[Tuple[int, int], int] = field(init=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, 'index', {
            (int(t), int(h)): idx for idx, (t, h) in enumerate(zip(self.tails, self.heads))})

    def __len__(self):
        return len(self.tails)

    def arcs(self) -> List[Tuple[int, int]]:
        return list(self.index.keys())

    def inverse_arcs(self) -> List[Tuple[int, int]]:
        return [(h, t) for t, h in self.index.keys()]

    def locate(self, tail: int, head: int) -> Tuple[int, int]:
        """
        :return: (index into the forward set, +1 if (tail, head) is the forward arc, -1 if it is its inverse)
        """
        if (tail, head) in self.index:
            return self.index[(tail, head)], 1
        if (head, tail) in self.index:
            return self.index[(head, tail)], -1
        raise ArcMissing(f'No candidate arc between nodes {tail} and {head}.')


def _nearest_turbines(distances: np.ndarray, turbine_ids: np.ndarray, k: int) -> np.ndarray:
    """
    :return: array (n_T, k) with the ids of each turbine's k nearest other turbines, ties by lower id
    """
    n = len(turbine_ids)
    masked = distances.copy()
    np.fill_diagonal(masked, np.inf)
    neighbors = np.empty((n, k), dtype=int)
    for row in range(n):
        order = np.lexsort((turbine_ids, masked[row]))
        neighbors[row] = turbine_ids[order[:k]]
    return neighbors


def build_candidate_graph(instance: Instance) -> CandidateGraph:
    n_s, n_t = instance.n_substations, instance.n_turbines
    distances_km = cdist(instance.coordinates, instance.coordinates) / METERS_PER_KM
    distances_km.setflags(write=False)

    truncation = int(instance.neighbor_truncation)
    clamped = truncation > n_t - 1
    if clamped:
        truncation = max(n_t - 1, 0)
        logger.warning(f'neighbor_truncation {instance.neighbor_truncation} clamped to {truncation} '
                       f'for {n_t} turbines.')

    turbine_ids = np.array(instance.turbine_ids, dtype=int)
    arcs = set()
    if truncation > 0:
        turbine_block = distances_km[n_s:, n_s:]
        for t, row in zip(turbine_ids, _nearest_turbines(turbine_block, turbine_ids, truncation)):
            for u in row:
                arcs.add((int(t), int(u)))
                arcs.add((int(u), int(t)))
    for t in instance.turbine_ids:
        for s in instance.substation_ids:
            arcs.add((t, s))

    arcs = tuple(sorted(arcs))
    lengths = np.array([distances_km[a - 1, b - 1] for a, b in arcs], dtype=float)
    logger.debug(f'Candidate graph for {instance.name}: {len(arcs)} arcs, truncation {truncation}.')
    return CandidateGraph(instance, arcs, lengths, distances_km, truncation, clamped)


def forward_arcs(g: CandidateGraph) -> ForwardArcSet:
    n_s = g.instance.n_substations
    forward = set()
    for tail, head in g.arcs:
        if head <= n_s:
            forward.add((tail, head))
        else:
            forward.add((min(tail, head), max(tail, head)))
    forward = sorted(forward)
    tails = np.array([a for a, _ in forward], dtype=int)
    heads = np.array([b for _, b in forward], dtype=int)
    lengths = np.array([g.length(a, b) for a, b in forward], dtype=float)
    return ForwardArcSet(tails, heads, lengths)
