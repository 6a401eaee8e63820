import logging

import pytest

from candidate_graph import ArcMissing, build_candidate_graph, forward_arcs
from model import generate_random_instance


def test_small_instance_clamps_truncation(chain_instance, caplog):
    with caplog.at_level(logging.WARNING):
        graph = build_candidate_graph(chain_instance)
    assert graph.truncation_clamped
    assert graph.neighbor_truncation == 1
    assert 'clamped' in caplog.text
    assert graph.arcs == ((2, 1), (2, 3), (3, 1), (3, 2))
    assert graph.edges() == [(1, 2), (1, 3), (2, 3)]
    assert graph.successors(1) == []
    assert graph.neighbors(1) == [2, 3]
    assert graph.length(1, 3) == pytest.approx(2.0)


def test_random_graph_structure():
    instance = generate_random_instance(5, n_turbines=30, n_substations=2).with_truncation(5)
    graph = build_candidate_graph(instance)
    assert not graph.truncation_clamped
    turbines = instance.turbine_ids
    for t in turbines:
        successors = graph.successors(t)
        assert sum(1 for u in successors if u in turbines) >= 5
        for s in instance.substation_ids:
            assert graph.has_arc(t, s)
        for u in successors:
            if u in turbines:
                assert graph.has_arc(u, t)
    for s in instance.substation_ids:
        assert graph.successors(s) == []
    assert len(graph.lengths) == len(graph)


def test_nearest_neighbours_are_kept():
    instance = generate_random_instance(8, n_turbines=20).with_truncation(3)
    graph = build_candidate_graph(instance)
    distances = graph.distances_km
    for t in instance.turbine_ids:
        others = sorted((distances[t - 1, u - 1], u) for u in instance.turbine_ids if u != t)
        for _, u in others[:3]:
            assert graph.has_arc(t, u)


def test_forward_arcs(chain_graph):
    arcs = forward_arcs(chain_graph)
    assert arcs.arcs() == [(2, 1), (2, 3), (3, 1)]
    assert arcs.inverse_arcs() == [(1, 2), (3, 2), (1, 3)]
    assert arcs.locate(2, 3) == (1, 1)
    assert arcs.locate(3, 2) == (1, -1)
    assert arcs.locate(1, 3) == (2, -1)
    assert arcs.lengths.tolist() == pytest.approx([1.0, 1.0, 2.0])
    with pytest.raises(ArcMissing):
        arcs.locate(1, 4)


@pytest.mark.parametrize('seed', range(5))
def test_arcs_match_brute_force_enumeration(seed):
    instance = generate_random_instance(seed, n_turbines=8, n_substations=2).with_truncation(3)
    graph = build_candidate_graph(instance)
    distances = graph.distances_km
    turbines = instance.turbine_ids
    expected = {(t, s) for t in turbines for s in instance.substation_ids}
    for t in turbines:
        nearest = sorted((u for u in turbines if u != t), key=lambda u: (distances[t - 1, u - 1], u))[:3]
        expected |= {(t, u) for u in nearest} | {(u, t) for u in nearest}
    assert set(graph.arcs) == expected
    assert len(graph.arcs) == len(expected)

    between_turbines = {(min(a, b), max(a, b)) for a, b in expected if b in turbines}
    to_substations = {(a, b) for a, b in expected if b not in turbines}
    arcs = forward_arcs(graph)
    assert arcs.arcs() == sorted(between_turbines | to_substations)
    assert len(arcs) == len(between_turbines) + 8 * 2
    assert sorted(arcs.arcs() + arcs.inverse_arcs()) == sorted(expected | {(b, a) for a, b in to_substations})
