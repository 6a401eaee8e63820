from fractions import Fraction

import numpy as np
import pytest

from geometry import Segment, all_crossings, crossing_matrix, distance, segments_cross, segments_for


def exact_cross(p1, q1, p2, q2) -> bool:
    """
    Closed-segment intersection by solving p1 + t (q1 - p1) = p2 + s (q2 - p2) in rationals.
    """
    p1, q1, p2, q2 = [tuple(Fraction(c) for c in point) for point in (p1, q1, p2, q2)]
    r = (q1[0] - p1[0], q1[1] - p1[1])
    d = (q2[0] - p2[0], q2[1] - p2[1])
    w = (p2[0] - p1[0], p2[1] - p1[1])
    denom = r[0] * d[1] - r[1] * d[0]
    if denom != 0:
        t = (w[0] * d[1] - w[1] * d[0]) / denom
        s = (w[0] * r[1] - w[1] * r[0]) / denom
        return 0 <= t <= 1 and 0 <= s <= 1
    if w[0] * r[1] - w[1] * r[0] != 0:
        return False
    # Collinear: compare the parameter intervals along the first segment.
    length2 = r[0] * r[0] + r[1] * r[1]
    t0 = (w[0] * r[0] + w[1] * r[1]) / length2
    t1 = ((q2[0] - p1[0]) * r[0] + (q2[1] - p1[1]) * r[1]) / length2
    return max(min(t0, t1), 0) <= min(max(t0, t1), 1)


def seg(p, q, nodes=(1, 2)):
    return Segment(tuple(map(float, p)), tuple(map(float, q)), *nodes)


DEGENERATE_CASES = [
    (((0, 0), (2, 2), (1, 2)), ((0, 2), (2, 0), (3, 4)), True),
    (((0, 0), (2, 0), (1, 2)), ((0, 1), (2, 1), (3, 4)), False),
    (((0, 0), (2, 0), (1, 2)), ((1, 0), (3, 0), (3, 4)), True),
    (((0, 0), (1, 0), (1, 2)), ((2, 0), (3, 0), (3, 4)), False),
    (((0, 0), (1, 0), (1, 2)), ((1, 0), (2, 0), (3, 4)), True),
    (((0, 0), (1, 0), (1, 2)), ((1, 0), (2, 0), (2, 4)), False),
    (((0, 0), (2, 0), (1, 2)), ((1, 0), (1, 2), (3, 4)), True),
    (((0, 0), (2, 0), (1, 2)), ((1, 1), (1, 2), (3, 4)), False),
    (((0, 0), (1, 1), (1, 2)), ((1, 1), (2, 0), (2, 4)), False),
    (((0, 0), (1, 1), (1, 2)), ((1, 1), (2, 0), (3, 4)), True),
    (((0, 0), (4, 0), (1, 2)), ((1, 0), (2, 0), (3, 4)), True),
    (((0, 0), (0, 3), (1, 2)), ((0, 1), (0, 5), (3, 4)), True),
    (((0, 0), (1, 1), (1, 2)), ((3, 0), (2, 1), (3, 4)), False),
    (((0, 0), (200000, 200000), (1, 2)), ((0, 200000), (200000, 0), (3, 4)), True),
    (((0, 0), (10000, 0), (1, 2)), ((0, 1), (10000, 2), (3, 4)), False),
    (((0, 0), (2, 0), (1, 2)), ((0, 0), (3, 0), (1, 4)), False),
    (((2, 2), (0, 0), (1, 2)), ((2, 0), (0, 2), (3, 4)), True),
    (((0, 0), (2, 0), (1, 2)), ((2, -1), (2, 1), (3, 4)), True),
    (((0, 0), (1, 0), (1, 2)), ((2, -1), (2, 1), (3, 4)), False),
    (((0, 0), (1, 0), (1, 2)), ((0, 0), (1, 0), (3, 4)), True),
]


@pytest.mark.parametrize('first, second, expected', DEGENERATE_CASES)
def test_degenerate_battery(first, second, expected):
    a = seg(first[0], first[1], first[2])
    b = seg(second[0], second[1], second[2])
    assert segments_cross(a, b) is expected
    assert segments_cross(b, a) is expected


def test_distance():
    assert distance((0.0, 0.0), (3.0, 4.0)) == pytest.approx(5.0)
    assert distance((1.0, 1.0), (1.0, 1.0)) == 0.0


def test_degenerate_segment_rejected():
    with pytest.raises(ValueError):
        seg((1, 1), (1, 1))


def _random_pairs(n, seed, bound=6):
    rng = np.random.default_rng(seed)
    pairs = []
    while len(pairs) < n:
        p1, q1, p2, q2 = [tuple(int(c) for c in rng.integers(-bound, bound + 1, size=2)) for _ in range(4)]
        if p1 != q1 and p2 != q2:
            pairs.append((p1, q1, p2, q2))
    return pairs


def _agreement(pairs):
    first = [seg(p1, q1, (1, 2)) for p1, q1, _, _ in pairs]
    second = [seg(p2, q2, (3, 4)) for _, _, p2, q2 in pairs]
    fast = np.diagonal(crossing_matrix(first, second))
    exact = np.array([exact_cross(*pair) for pair in pairs])
    return int(np.sum(fast != exact))


def test_agrees_with_exact_oracle():
    # Small integer grid, so collinear and touching configurations come up often.
    assert _agreement(_random_pairs(1000, seed=1)) == 0


@pytest.mark.slow
def test_agrees_with_exact_oracle_full():
    assert _agreement(_random_pairs(10000, seed=2, bound=50)) == 0


def test_crossing_matrix_shape_and_values():
    first = [seg((0, 0), (2, 2), (1, 2)), seg((5, 5), (6, 6), (5, 6))]
    second = [seg((0, 2), (2, 0), (3, 4)), seg((10, 0), (11, 0), (7, 8)), seg((5, 6), (6, 5), (9, 10))]
    matrix = crossing_matrix(first, second)
    assert matrix.shape == (2, 3)
    assert matrix.tolist() == [[True, False, False], [False, False, True]]
    assert crossing_matrix([], second).shape == (0, 3)


def test_all_crossings_pairs_are_sorted():
    coordinates = np.array([[0, 0], [2, 2], [0, 2], [2, 0], [1, 3], [1, -1]], dtype=float)
    segments = segments_for([(1, 2), (3, 4), (5, 6)], coordinates)
    assert all_crossings(segments) == [(0, 1), (0, 2), (1, 2)]
    assert all_crossings(segments[:1]) == []


def _rigid_motion(theta, shift, reflect):
    rotation = np.array([[np.cos(theta), -np.sin(theta)], [np.sin(theta), np.cos(theta)]])
    if reflect:
        rotation = rotation @ np.diag([1.0, -1.0])

    def move(segment):
        p, q = (rotation @ np.array(point, dtype=float) + shift for point in (segment.p, segment.q))
        return Segment(tuple(p), tuple(q), segment.node_p, segment.node_q)
    return move


def _moved_matrices_agree(first, second, seed, motions=10):
    rng = np.random.default_rng(seed)
    expected = crossing_matrix(first, second)
    for trial in range(motions):
        move = _rigid_motion(rng.uniform(0, 2 * np.pi), rng.uniform(-50, 50, size=2), reflect=trial % 2 == 1)
        moved = crossing_matrix([move(s) for s in first], [move(s) for s in second])
        if not np.array_equal(moved, expected):
            return False
    return True


def test_crossing_matrix_invariant_under_rigid_motions():
    pairs = _random_pairs(150, seed=3)
    first = [seg(p1, q1, (1, 2)) for p1, q1, _, _ in pairs]
    second = [seg(p2, q2, (3, 4)) for _, _, p2, q2 in pairs]
    assert _moved_matrices_agree(first, second, seed=4)


@pytest.mark.parametrize('height, expected', [(0.0, True), (1e-12, True), (1e-3, False), (-1e-3, True)])
def test_tolerance_boundary_survives_rigid_motions(height, expected):
    first = [seg((0, 0), (2, 0), (1, 2))]
    second = [Segment((1.0, height), (1.0, 2.0), 3, 4)]
    assert segments_cross(first[0], second[0]) is expected
    assert crossing_matrix(first, second)[0, 0] == expected
    assert _moved_matrices_agree(first, second, seed=5, motions=20)
