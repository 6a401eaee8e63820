from dataclasses import dataclass
import logging
from typing import Iterable, List, Sequence, Tuple

import numpy as np

from constants import ORIENTATION_EPS


logger = logging.getLogger(__name__)

Point = Tuple[float, float]


@dataclass(eq=True, frozen=True)
class Segment:
    p: Point
    q: Point
    node_p: int
    node_q: int

    def __post_init__(self):
        if tuple(self.p) == tuple(self.q):
            raise ValueError(f'Degenerate segment between nodes {self.node_p} and {self.node_q}.')

    @property
    def nodes(self) -> Tuple[int, int]:
        return self.node_p, self.node_q


def distance(p: Point, q: Point) -> float:
    return float(np.hypot(p[0] - q[0], p[1] - q[1]))


def segments_for(pairs: Iterable[Tuple[int, int]], coordinates: np.ndarray) -> List[Segment]:
    """
    :param pairs: (node, node) tuples with 1-based node ids
    :param coordinates: array of shape (n_nodes, 2), row i - 1 holding node i
    :return: one Segment per pair, in order
    """
    segments = []
    for a, b in pairs:
        pa, pb = coordinates[a - 1], coordinates[b - 1]
        segments.append(Segment((float(pa[0]), float(pa[1])), (float(pb[0]), float(pb[1])), a, b))
    return segments


def _stack(segments: Sequence[Segment]):
    if len(segments) == 0:
        return np.empty((0, 2)), np.empty((0, 2)), np.empty((0, 2), dtype=int)
    starts = np.array([s.p for s in segments], dtype=float)
    ends = np.array([s.q for s in segments], dtype=float)
    nodes = np.array([s.nodes for s in segments], dtype=int)
    return starts, ends, nodes


def _orientation(a, b, c):
    return (b[..., 0] - a[..., 0]) * (c[..., 1] - a[..., 1]) - (b[..., 1] - a[..., 1]) * (c[..., 0] - a[..., 0])


def _within_box(a, b, c, tol):
    lo = np.minimum(a, b) - tol[..., None]
    hi = np.maximum(a, b) + tol[..., None]
    return np.all((c >= lo) & (c <= hi), axis=-1)


def cross_arrays(p1, q1, nodes1, p2, q2, nodes2) -> np.ndarray:
    """
    Vectorised crossing predicate over broadcastable arrays of segment endpoints.
    Segments sharing a node id never cross; otherwise the closed segments cross when they
    meet anywhere, which covers T-junctions and collinear overlap.
    """
    p1, q1, p2, q2 = np.broadcast_arrays(p1, q1, p2, q2)
    scale = np.asarray(np.maximum(1.0, np.max(np.abs(np.stack([p1, q1, p2, q2])), axis=(0, -1))))
    eps = ORIENTATION_EPS * scale ** 2

    def sign(value):
        return np.where(np.abs(value) <= eps, 0, np.sign(value))

    d1 = sign(_orientation(p2, q2, p1))
    d2 = sign(_orientation(p2, q2, q1))
    d3 = sign(_orientation(p1, q1, p2))
    d4 = sign(_orientation(p1, q1, q2))

    tol = ORIENTATION_EPS * scale
    proper = (d1 * d2 < 0) & (d3 * d4 < 0)
    touching = (
        ((d1 == 0) & _within_box(p2, q2, p1, tol))
        | ((d2 == 0) & _within_box(p2, q2, q1, tol))
        | ((d3 == 0) & _within_box(p1, q1, p2, tol))
        | ((d4 == 0) & _within_box(p1, q1, q2, tol))
    )

    nodes1, nodes2 = np.broadcast_arrays(nodes1, nodes2)
    shared = ((nodes1[..., 0] == nodes2[..., 0]) | (nodes1[..., 0] == nodes2[..., 1])
              | (nodes1[..., 1] == nodes2[..., 0]) | (nodes1[..., 1] == nodes2[..., 1]))
    return (proper | touching) & ~shared


def segments_cross(a: Segment, b: Segment) -> bool:
    result = cross_arrays(np.array(a.p), np.array(a.q), np.array(a.nodes),
                          np.array(b.p), np.array(b.q), np.array(b.nodes))
    return bool(result)


def crossing_matrix(first: Sequence[Segment], second: Sequence[Segment]) -> np.ndarray:
    """
    :return: boolean matrix M with M[i, j] true when first[i] crosses second[j]
    """
    if len(first) == 0 or len(second) == 0:
        return np.zeros((len(first), len(second)), dtype=bool)
    p1, q1, n1 = _stack(first)
    p2, q2, n2 = _stack(second)
    return cross_arrays(p1[:, None], q1[:, None], n1[:, None], p2[None, :], q2[None, :], n2[None, :])


def all_crossings(edges: Sequence[Segment]) -> List[Tuple[int, int]]:
    if len(edges) < 2:
        return []
    starts, ends, nodes = _stack(edges)
    rows, cols = np.triu_indices(len(edges), k=1)
    mask = cross_arrays(starts[rows], ends[rows], nodes[rows], starts[cols], ends[cols], nodes[cols])
    return [(int(i), int(j)) for i, j in zip(rows[mask], cols[mask])]
