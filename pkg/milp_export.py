"""
MILP model of the collection-system problem (binary arc and arc-load variables) written in
CPLEX-LP format through PuLP, plus warm-start files built from a heuristic design.

Variables: x_i_j selects arc i -> j, y_k_i_j says k turbines (i included) flow over it.
Constraint names: degree_i, flow_i (per turbine), cross_i_j_u_v (per crossing pair),
link_i_j (per arc), valid_i_v (per turbine and 2 <= v <= Q - 1).
"""
from dataclasses import dataclass, field
import logging
import math
from typing import Dict, List, Optional, Tuple

import numpy as np
import pulp
import regex as re

from candidate_graph import ArcMissing, CandidateGraph
from geometry import crossing_matrix, segments_for
from model import CableCatalog, EdgeMatrix, Instance


logger = logging.getLogger(__name__)

LE, EQ, GE = pulp.LpConstraintLE, pulp.LpConstraintEQ, pulp.LpConstraintGE
FEASIBILITY_TOL = 1e-6

Arc = Tuple[int, int]


class IoFailure(Exception):
    def __init__(self, value='Could not write the model file'):
        self.value = value

    def __str__(self):
        return repr(self.value)


@dataclass
class ConstraintRow:
    coefficients: Dict[str, float]
    sense: int
    rhs: float

    def evaluate(self, assignment: Dict[str, float]) -> float:
        return sum(coef * assignment.get(name, 0.0) for name, coef in self.coefficients.items())

    def is_satisfied(self, assignment: Dict[str, float]) -> bool:
        lhs = self.evaluate(assignment)
        if self.sense == LE:
            return lhs <= self.rhs + FEASIBILITY_TOL
        if self.sense == GE:
            return lhs >= self.rhs - FEASIBILITY_TOL
        return abs(lhs - self.rhs) <= FEASIBILITY_TOL


@dataclass(eq=False)
class MilpModel:
    problem: pulp.LpProblem
    instance: Instance
    arcs: List[Arc]
    h: Dict[int, int]
    chi: List[Tuple[Arc, Arc]]
    x: Dict[Arc, pulp.LpVariable] = field(default_factory=dict)
    y: Dict[Tuple[int, int, int], pulp.LpVariable] = field(default_factory=dict)
    objective: Dict[str, float] = field(default_factory=dict)
    rows: Dict[str, ConstraintRow] = field(default_factory=dict)
    by_name: Dict[str, pulp.LpVariable] = field(default_factory=dict, repr=False)

    @property
    def catalog(self) -> CableCatalog:
        return self.instance.catalog

    @property
    def n_variables(self) -> int:
        return len(self.x) + len(self.y)

    def add_row(self, name: str, coefficients: Dict[str, float], sense: int, rhs: float):
        expression = pulp.LpAffineExpression([(self.by_name[n], c) for n, c in coefficients.items()])
        self.problem.addConstraint(pulp.LpConstraint(expression, sense=sense, name=name, rhs=rhs))
        self.rows[name] = ConstraintRow(coefficients, sense, rhs)


def x_name(i: int, j: int) -> str:
    return f'x_{i}_{j}'


def y_name(k: int, i: int, j: int) -> str:
    return f'y_{k}_{i}_{j}'


def crossing_pairs(instance: Instance, graph: CandidateGraph) -> List[Tuple[Arc, Arc]]:
    """
    Unordered pairs of undirected candidate edges that cross, each edge as (lower id, higher id).
    """
    edges = graph.edges()
    segments = segments_for(edges, instance.coordinates)
    crossing = np.triu(crossing_matrix(segments, segments), k=1)
    return [(edges[a], edges[b]) for a, b in np.argwhere(crossing)]


def build_milp(instance: Instance, graph: CandidateGraph) -> MilpModel:
    catalog = instance.catalog
    q_max = catalog.max_capacity
    name = re.sub(r'\W+', '_', f'collection_system_{instance.name}')
    model = MilpModel(
        problem=pulp.LpProblem(name, pulp.LpMinimize),
        instance=instance,
        arcs=list(graph.arcs),
        h={node: q_max if instance.is_substation(node) else q_max - 1 for node in instance.node_ids},
        chi=crossing_pairs(instance, graph),
    )

    for i, j in model.arcs:
        model.x[(i, j)] = model.by_name[x_name(i, j)] = pulp.LpVariable(x_name(i, j), cat=pulp.LpBinary)
        for k in range(1, model.h[j] + 1):
            model.y[(k, i, j)] = model.by_name[y_name(k, i, j)] = pulp.LpVariable(y_name(k, i, j), cat=pulp.LpBinary)
            model.objective[y_name(k, i, j)] = catalog.step_cost(graph.length(i, j), k)
    model.problem.setObjective(pulp.LpAffineExpression([(model.by_name[n], c) for n, c in model.objective.items()]))

    outgoing = {node: [] for node in instance.node_ids}
    incoming = {node: [] for node in instance.node_ids}
    for k, i, j in model.y:
        outgoing[i].append((k, i, j))
        incoming[j].append((k, i, j))

    for i in instance.turbine_ids:
        model.add_row(f'degree_{i}', {y_name(*key): 1.0 for key in outgoing[i]}, EQ, 1.0)
    for i in instance.turbine_ids:
        coefficients = {y_name(*key): float(key[0]) for key in outgoing[i]}
        for key in incoming[i]:
            coefficients[y_name(*key)] = coefficients.get(y_name(*key), 0.0) - key[0]
        model.add_row(f'flow_{i}', coefficients, EQ, 1.0)
    for (i, j), (u, v) in model.chi:
        coefficients = {x_name(a, b): 1.0 for a, b in ((i, j), (j, i), (u, v), (v, u)) if (a, b) in model.x}
        model.add_row(f'cross_{i}_{j}_{u}_{v}', coefficients, LE, 1.0)
    for i, j in model.arcs:
        coefficients = {y_name(k, i, j): 1.0 for k in range(1, model.h[j] + 1)}
        coefficients[x_name(i, j)] = -1.0
        model.add_row(f'link_{i}_{j}', coefficients, LE, 0.0)
    for i in instance.turbine_ids:
        for v in range(2, q_max):
            coefficients = {}
            for k, _, j in outgoing[i]:
                if k >= v + 1:
                    coefficients[y_name(k, i, j)] = -float((k - 1) // v)
            for k, j, _ in incoming[i]:
                if k >= v and not instance.is_substation(j):
                    coefficients[y_name(k, j, i)] = 1.0
            if coefficients:
                model.add_row(f'valid_{i}_{v}', coefficients, LE, 0.0)
    logger.info(f'MILP for {instance.name}: {model.n_variables} variables, {len(model.rows)} constraints, '
                f'{len(model.chi)} crossing pairs.')
    return model


def warm_start_assignment(tree: EdgeMatrix, model: MilpModel) -> Dict[str, int]:
    """
    Maps every row (upstream j, downstream i, count k) to x_i_j = 1 and y_k_i_j = 1. Rows whose
    count exceeds h(j) have no y variable and are logged as inconsistent with the MILP.
    """
    if len(tree) == 0:
        raise ValueError('Cannot build a warm start from an empty design.')
    assignment = {}
    for row in tree:
        i, j, k = row.node_b, row.node_a, row.downstream
        if (i, j) not in model.x:
            raise ArcMissing(f'Edge {i}->{j} is not an arc of the model.')
        assignment[x_name(i, j)] = 1
        if k > model.h[j]:
            logger.warning(f'Edge {i}->{j} carries {k} turbines, above h({j})={model.h[j]}; no y variable set.')
            continue
        assignment[y_name(k, i, j)] = 1
    return dict(sorted(assignment.items()))


def write_warm_start(tree: EdgeMatrix, model: MilpModel, path: str) -> Dict[str, int]:
    assignment = warm_start_assignment(tree, model)
    objective, _ = evaluate_assignment(model, assignment)
    try:
        with open(path, 'w') as fd:
            fd.write(f'# Warm start for {model.problem.name}\n')
            fd.write(f'# Objective value = {objective:.6f}\n')
            for name, value in assignment.items():
                fd.write(f'{name} {value}\n')
    except OSError as e:
        raise IoFailure(f'Could not write warm start {path}: {e}')
    return assignment


def read_warm_start(path: str) -> Dict[str, float]:
    assignment = {}
    try:
        with open(path) as fd:
            for line in fd:
                line = line.strip()
                if not line or line.startswith('#'):
                    continue
                name, value = line.split()
                assignment[name] = float(value)
    except OSError as e:
        raise IoFailure(f'Could not read warm start {path}: {e}')
    return assignment


def write_lp(model: MilpModel, path: str, warm_start: Optional[Dict[str, int]] = None):
    """
    Writes the LP file; a warm start, if given, is prepended as a block of backslash comment lines.
    """
    try:
        model.problem.writeLP(path)
        if warm_start:
            with open(path) as fd:
                body = fd.read()
            header = ['\\ Warm start (variables not listed are 0):']
            header += [f'\\ {name} {value}' for name, value in warm_start.items()]
            with open(path, 'w') as fd:
                fd.write('\n'.join(header) + '\n' + body)
    except OSError as e:
        raise IoFailure(f'Could not write LP file {path}: {e}')


def read_lp_summary(path: str) -> Dict[str, int]:
    """
    Re-parses an LP file written by write_lp and counts its constraints and binary variables.
    """
    try:
        with open(path) as fd:
            text = fd.read()
    except OSError as e:
        raise IoFailure(f'Could not read LP file {path}: {e}')
    sections = re.split(r'(?im)^\s*(minimize|subject to|binaries|binary|generals|bounds|end)\s*$', text)
    summary = {'constraints': 0, 'binaries': 0, 'warm_start': 0}
    for header, body in zip(sections[1::2], sections[2::2]):
        header = header.lower()
        if header == 'subject to':
            summary['constraints'] = len(re.findall(r'(?m)^\s*[A-Za-z_]\w*:', body))
        elif header in ('binaries', 'binary'):
            summary['binaries'] = len(body.split())
    summary['warm_start'] = len(re.findall(r'(?m)^\\ [xy]_\S+ \S+$', text))
    return summary


def evaluate_assignment(model: MilpModel, assignment: Dict[str, float]) -> Tuple[float, List[str]]:
    """
    :param assignment: variable name -> value; variables not listed are 0
    :return: (objective value, names of the violated constraints)
    """
    objective = sum(coef * assignment.get(name, 0.0) for name, coef in model.objective.items())
    violated = [name for name, row in model.rows.items() if not row.is_satisfied(assignment)]
    if not math.isfinite(objective):
        logger.warning('Assignment uses an arc load above every cable capacity.')
    return float(objective), violated
