from dataclasses import asdict, dataclass, field
import json
import logging
import math
from typing import Dict, List, Optional

import networkx as nx

from geometry import all_crossings, distance, segments_for
from model import EdgeMatrix, Instance
from constants import METERS_PER_KM


logger = logging.getLogger(__name__)


@dataclass
class DesignReport:
    c1: bool
    c2: bool
    c3: bool
    total_cost: float
    crossings: int
    feeder_count: Dict[int, int]
    max_feeders: Optional[int] = None
    c4: Optional[bool] = None
    messages: List[str] = field(default_factory=list)

    @property
    def feasible(self) -> bool:
        return self.c1 and self.c2 and self.c3

    def to_dict(self) -> Dict:
        data = asdict(self)
        data['feeder_count'] = {str(s): n for s, n in self.feeder_count.items()}
        data['total_cost'] = self.total_cost if math.isfinite(self.total_cost) else None
        data['feasible'] = self.feasible
        return data

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)


def _side_of(graph: nx.Graph, upstream: int, downstream: int, n_substations: int):
    """
    :return: (turbines on the downstream side of the edge, whether that side holds a substation)
    """
    pruned = graph.copy()
    pruned.remove_edge(upstream, downstream)
    side = nx.node_connected_component(pruned, downstream)
    return sum(1 for node in side if node > n_substations), any(node <= n_substations for node in side)


def check_design(tree: EdgeMatrix, instance: Instance, max_feeders: Optional[int] = None) -> DesignReport:
    """
    Recomputes everything from the coordinates and the catalog; the row counts and cables are only compared.
    The feeder limit (max_feeders, else the instance's) is reported but never makes a design infeasible.
    """
    messages = []
    n_s = instance.n_substations
    catalog = instance.catalog
    graph = nx.Graph()
    graph.add_nodes_from(instance.node_ids)
    graph.add_edges_from(tree.pairs())

    c1 = True
    if graph.number_of_edges() != len(tree) or nx.number_of_selfloops(graph) > 0:
        c1 = False
        messages.append('Repeated edge or self loop.')
    elif len(tree) != instance.n_turbines:
        c1 = False
        messages.append(f'{len(tree)} edges for {instance.n_turbines} turbines.')
    elif not nx.is_forest(graph):
        c1 = False
        messages.append('Edges contain a cycle.')
    else:
        for component in nx.connected_components(graph):
            roots = [node for node in component if node <= n_s]
            if len(roots) != 1:
                c1 = False
                messages.append(f'Component {sorted(component)[:5]} reaches {len(roots)} substation(s).')
                break

    c2 = c1
    counts = {}
    if c1:
        for row in tree:
            k, reversed_edge = _side_of(graph, row.node_a, row.node_b, n_s)
            if reversed_edge:
                k, _ = _side_of(graph, row.node_b, row.node_a, n_s)
                c2 = False
                messages.append(f'Edge {row} points towards its substation.')
            counts[row.key] = k
            expected = catalog.cheapest_cable_for(k)
            if expected is None:
                c2 = False
                messages.append(f'Edge {row} carries {k} turbines, above Q={catalog.max_capacity}.')
            elif row.downstream != k or row.cable != expected:
                c2 = False
                messages.append(f'Edge {row} has count {row.downstream} / cable {row.cable}, expected {k} / {expected}.')

    pairs = all_crossings(segments_for(tree.pairs(), instance.coordinates))
    c3 = len(pairs) == 0
    if not c3:
        messages.append(f'{len(pairs)} crossing pair(s).')

    total_cost = 0.0
    unit_costs = catalog.unit_costs
    for row in tree:
        length = distance(instance.coord(row.node_a), instance.coord(row.node_b)) / METERS_PER_KM
        cable = catalog.cheapest_cable_for(counts[row.key]) if c1 else row.cable
        total_cost += math.inf if cable is None else length * unit_costs[cable]

    feeder_count = {s: graph.degree(s) for s in instance.substation_ids}
    max_feeders = instance.max_feeders if max_feeders is None else max_feeders
    c4 = None
    if max_feeders is not None:
        c4 = max(feeder_count.values()) <= max_feeders
        if not c4:
            messages.append(f'Feeder limit {max_feeders} exceeded: {feeder_count}.')
    return DesignReport(c1, c2, c3, total_cost, len(pairs), feeder_count, max_feeders, c4, messages)
