import json
from collections import defaultdict
from typing import Dict, Iterable, List, Sequence, Tuple

import networkx as nx
import regex as re

from geometry import all_crossings, segments_for


def forest_graph(pairs: Iterable[Tuple[int, int]], node_ids: Sequence[int]) -> nx.Graph:
    """
    Edges go in sorted (lower, higher) order so every adjacency list ends up in ascending node id.
    """
    graph = nx.Graph()
    graph.add_nodes_from(node_ids)
    graph.add_edges_from(sorted((min(a, b), max(a, b)) for a, b in pairs))
    return graph


def is_spanning_forest(pairs: Sequence[Tuple[int, int]], instance) -> bool:
    """
    :return: True when every turbine has exactly one path to exactly one substation
    """
    keys = {(min(a, b), max(a, b)) for a, b in pairs}
    if len(keys) != len(pairs) or len(pairs) != instance.n_turbines:
        return False
    if any(a == b for a, b in keys):
        return False
    graph = forest_graph(keys, instance.node_ids)
    n_s = instance.n_substations
    for component in nx.connected_components(graph):
        if sum(1 for node in component if node <= n_s) != 1:
            return False
    return True


def orient_forest(graph: nx.Graph, roots: Sequence[int]) -> Tuple[List[Tuple[int, int]], Dict[int, int]]:
    """
    :param graph: forest whose components each hold one root
    :param roots: substation ids
    :return: (upstream, downstream) edges in depth-first order, visiting children by ascending id,
     and the number of turbines in the subtree of every downstream node
    """
    oriented = []
    for root in sorted(roots):
        oriented.extend(nx.dfs_edges(graph, source=root))
    below = defaultdict(int)
    for parent, child in reversed(oriented):
        below[child] += 1
        below[parent] += below[child]
    return oriented, dict(below)


def count_crossings(pairs: Sequence[Tuple[int, int]], instance) -> int:
    return len(all_crossings(segments_for(pairs, instance.coordinates)))


def make_run_id(run: Dict) -> str:
    return re.sub(r'\W+', '_', json.dumps(run, sort_keys=True)).strip('_')
