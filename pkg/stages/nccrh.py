from dataclasses import dataclass, field
from enum import IntEnum
import logging
import math
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from candidate_graph import CandidateGraph, ForwardArcSet, forward_arcs
from constants import NEGATIVE_COST_TOL
from model import CableCatalog, EdgeMatrix, Instance
from stages.base import BaseStage, StageResult
from stages.tsh import assign_cables
from utils import count_crossings, is_spanning_forest


logger = logging.getLogger(__name__)

RELAX_TOL = 1e-12


class ArcKind(IntEnum):
    FORWARD = 0
    INVERSE = 1
    TO_TRANSFER = 2
    FROM_TRANSFER = 3
    ROOT = 4


@dataclass(eq=False, frozen=True)
class FlowAssignment:
    """
    Signed integer flow per forward arc: positive runs tail to head, negative head to tail.
    """
    arcs: ForwardArcSet
    values: np.ndarray

    def mirrored(self) -> np.ndarray:
        return np.concatenate([self.values, self.values])

    def active(self) -> np.ndarray:
        return np.flatnonzero(self.values)

    def active_pairs(self) -> List[Tuple[int, int]]:
        """
        :return: (from, to) node pairs of the arcs carrying flow, in the direction the flow runs
        """
        pairs = []
        for idx in self.active():
            tail, head = int(self.arcs.tails[idx]), int(self.arcs.heads[idx])
            pairs.append((tail, head) if self.values[idx] > 0 else (head, tail))
        return pairs

    def substation_inflows(self, n_substations: int) -> np.ndarray:
        inflows = np.zeros(n_substations + 1, dtype=int)
        into_substation = self.arcs.heads <= n_substations
        np.add.at(inflows, self.arcs.heads[into_substation], self.values[into_substation])
        return inflows

    def net_outflow(self, n_nodes: int) -> np.ndarray:
        outflow = np.zeros(n_nodes + 1, dtype=int)
        np.add.at(outflow, self.arcs.tails, self.values)
        np.add.at(outflow, self.arcs.heads, -self.values)
        return outflow

    def cost(self, catalog: CableCatalog) -> float:
        return float(np.sum(catalog.step_costs(self.arcs.lengths, np.abs(self.values))))


@dataclass(eq=False, frozen=True)
class CostedCycle:
    arcs: Tuple[int, ...]
    kinds: Tuple[int, ...]
    refs: Tuple[int, ...]
    nodes: Tuple[int, ...]
    cost: float

    def __len__(self):
        return len(self.arcs)


@dataclass(eq=False, frozen=True)
class ResidualNetwork:
    """
    Constant residual structure: forward arcs, their inverses, substation <-> transfer node arcs
    and zero-cost arcs from the fictitious root to every other node. Only the costs depend on the flow.
    """
    n_nodes: int
    tails: np.ndarray
    heads: np.ndarray
    kinds: np.ndarray
    refs: np.ndarray
    inverse: np.ndarray
    root: int
    transfer: Optional[int] = None
    n_substations: int = 0
    index: Dict[Tuple[int, int], int] = field(init=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, 'index', {
            (int(t), int(h)): idx for idx, (t, h) in enumerate(zip(self.tails, self.heads))})

    def __len__(self):
        return len(self.tails)

    @classmethod
    def assemble(cls, n_nodes, tails, heads, kinds, refs, inverse, transfer=None, n_substations=0):
        """
        Appends the root arcs to the given arcs. Nodes are 1..n_nodes, then the transfer node if any,
        then the root.
        """
        top = n_nodes if transfer is None else transfer
        root = top + 1
        reached = np.arange(1, top + 1)
        return cls(
            n_nodes=n_nodes,
            tails=np.concatenate([np.asarray(tails, dtype=int), np.full(len(reached), root)]),
            heads=np.concatenate([np.asarray(heads, dtype=int), reached]),
            kinds=np.concatenate([np.asarray(kinds, dtype=int), np.full(len(reached), ArcKind.ROOT)]),
            refs=np.concatenate([np.asarray(refs, dtype=int), reached]),
            inverse=np.concatenate([np.asarray(inverse, dtype=int), np.full(len(reached), -1)]),
            root=root,
            transfer=transfer,
            n_substations=n_substations,
        )

    @classmethod
    def generic(cls, n_nodes: int, arcs: Sequence[Tuple[int, int]], inverse_pairs: Sequence[Tuple[int, int]] = ()):
        """
        Network over plain arcs (all FORWARD kind) plus root arcs. inverse_pairs lists index pairs
        of arcs that undo each other.
        """
        inverse = np.full(len(arcs), -1)
        for a, b in inverse_pairs:
            inverse[a], inverse[b] = b, a
        return cls.assemble(n_nodes, [a for a, _ in arcs], [b for _, b in arcs],
                            [ArcKind.FORWARD] * len(arcs), list(range(len(arcs))), inverse)

    def find_arc(self, tail: int, head: int) -> int:
        return self.index[(tail, head)]

    def cycle(self, arcs: Sequence[int], costs: np.ndarray) -> CostedCycle:
        arcs = tuple(int(a) for a in arcs)
        return CostedCycle(
            arcs=arcs,
            kinds=tuple(int(self.kinds[a]) for a in arcs),
            refs=tuple(int(self.refs[a]) for a in arcs),
            nodes=tuple(int(self.tails[a]) for a in arcs),
            cost=float(sum(costs[a] for a in arcs)),
        )


def residual_network(instance: Instance, arcs: ForwardArcSet) -> ResidualNetwork:
    n_nodes, n_s, m = instance.n_nodes, instance.n_substations, len(arcs)
    transfer = n_nodes + 1
    substations = np.arange(1, n_s + 1)
    forward_refs = np.arange(m)
    return ResidualNetwork.assemble(
        n_nodes,
        tails=np.concatenate([arcs.tails, arcs.heads, substations, np.full(n_s, transfer)]),
        heads=np.concatenate([arcs.heads, arcs.tails, np.full(n_s, transfer), substations]),
        kinds=np.concatenate([np.full(m, ArcKind.FORWARD), np.full(m, ArcKind.INVERSE),
                              np.full(n_s, ArcKind.TO_TRANSFER), np.full(n_s, ArcKind.FROM_TRANSFER)]),
        refs=np.concatenate([forward_refs, forward_refs, substations, substations]),
        inverse=np.concatenate([forward_refs + m, forward_refs,
                                np.arange(2 * m + n_s, 2 * m + 2 * n_s), np.arange(2 * m, 2 * m + n_s)]),
        transfer=transfer,
        n_substations=n_s,
    )


def flow_from_tree(tree: EdgeMatrix, arcs: ForwardArcSet) -> FlowAssignment:
    """
    Every tree row (upstream, downstream, k) sends k units from its downstream to its upstream node.
    """
    values = np.zeros(len(arcs), dtype=int)
    for row in tree:
        idx, sign = arcs.locate(row.node_b, row.node_a)
        values[idx] = sign * row.downstream
    return FlowAssignment(arcs, values)


def residual_cost(net: ResidualNetwork, arc: int, mirrored: np.ndarray, delta: int, catalog: CableCatalog,
                  lengths: np.ndarray, inflows: np.ndarray) -> float:
    """
    :param net: residual network
    :param arc: arc index into the network
    :param mirrored: flows over forward arcs followed by the same flows for their inverses
    :param delta: surplus flow pushed along the arc
    :param catalog: cable catalog giving the step cost
    :param lengths: forward arc lengths in km
    :param inflows: current flow into each substation, indexed by substation id
    :return: residual cost, math.inf when the push is not allowed
    """
    kind, ref = int(net.kinds[arc]), int(net.refs[arc])
    if kind in (ArcKind.TO_TRANSFER, ArcKind.ROOT):
        return 0.0
    if kind == ArcKind.FROM_TRANSFER:
        return 0.0 if delta <= inflows[ref] else math.inf
    m = len(lengths)
    if kind == ArcKind.FORWARD:
        lam = int(mirrored[ref])
        updated = abs(lam + delta)
    else:
        lam = int(mirrored[m + ref])
        if net.tails[arc] <= net.n_substations and delta > lam:
            return math.inf
        updated = abs(lam - delta)
    if updated > catalog.max_capacity:
        return math.inf
    return catalog.step_cost(lengths[ref], updated) - catalog.step_cost(lengths[ref], abs(lam))


def residual_costs(net: ResidualNetwork, flow: FlowAssignment, delta: int, catalog: CableCatalog,
                   inflows: np.ndarray) -> np.ndarray:
    lam, lengths = flow.values, flow.arcs.lengths
    current = catalog.step_costs(lengths, np.abs(lam))
    grow = catalog.step_costs(lengths, np.abs(lam + delta)) - current
    shrink = catalog.step_costs(lengths, np.abs(lam - delta)) - current
    # The inverse of a turbine -> substation arc may only hand back flow that is there.
    shrink = np.where((flow.arcs.heads <= net.n_substations) & (delta > lam), math.inf, shrink)

    costs = np.zeros(len(net))
    forward = net.kinds == ArcKind.FORWARD
    inverse = net.kinds == ArcKind.INVERSE
    from_transfer = net.kinds == ArcKind.FROM_TRANSFER
    costs[forward] = grow[net.refs[forward]]
    costs[inverse] = shrink[net.refs[inverse]]
    costs[from_transfer] = np.where(delta <= inflows[net.refs[from_transfer]], 0.0, math.inf)
    return costs


def split_walk(walk: Sequence[int], inverse: np.ndarray) -> List[List[int]]:
    """
    Splits a closed walk at the first arc whose inverse appears later in it: the arcs before and
    after the pair form one closed walk, the arcs between them another. Recurses on both.
    """
    walk = list(walk)
    position = {arc: i for i, arc in enumerate(walk)}
    for i, arc in enumerate(walk):
        j = position.get(int(inverse[arc]), -1) if inverse[arc] >= 0 else -1
        if j > i:
            outer = walk[:i] + walk[j + 1:]
            inner = walk[i + 1:j]
            return [piece for part in (outer, inner) if part for piece in split_walk(part, inverse)]
    return [walk]



def split_at_repeated_nodes(walk: Sequence[int], tails: np.ndarray) -> List[List[int]]:
    """
    Breaks a closed walk into closed walks that leave each node at most once, so no arc repeats.
    """
    pieces, stack, position = [], [], {}
    for arc in walk:
        node = int(tails[arc])
        if node in position:
            start = position[node]
            pieces.append(stack[start:])
            for a in stack[start:]:
                del position[int(tails[a])]
            del stack[start:]
        position[node] = len(stack)
        stack.append(arc)
    if stack:
        pieces.append(stack)
    return pieces


class _Labels:
    """
    Bellman-Ford labels, up to two per node with distinct predecessor nodes when walks may not
    turn straight back along the arc they arrived on.
    Following predecessors may revisit a node through its other label, so a recovered walk can
    repeat nodes and arcs.
    """
    def __init__(self, n_states: int, slots: int, tails: List[int]):
        self.slots = slots
        self.tails = tails
        self.dist = [[math.inf] * slots for _ in range(n_states)]
        self.arc = [[-1] * slots for _ in range(n_states)]
        self.prev = [[-1] * slots for _ in range(n_states)]

    def pred(self, v: int, s: int) -> int:
        a = self.arc[v][s]
        return self.tails[a] if a >= 0 else -1

    def pick(self, u: int, v: int) -> int:
        if self.slots == 1 or self.pred(u, 0) != v:
            return 0
        return 1

    def _set(self, v, s, d, a, prev):
        self.dist[v][s], self.arc[v][s], self.prev[v][s] = d, a, prev

    def _swap(self, v):
        for table in (self.dist, self.arc, self.prev):
            table[v][0], table[v][1] = table[v][1], table[v][0]

    def offer(self, v: int, d: float, a: int, prev: int) -> bool:
        u = self.tails[a]
        if self.slots == 1 or self.pred(v, 0) == u:
            if d < self.dist[v][0] - RELAX_TOL:
                self._set(v, 0, d, a, prev)
                return True
            return False
        if self.pred(v, 1) == u:
            if d < self.dist[v][1] - RELAX_TOL:
                self._set(v, 1, d, a, prev)
                if self.dist[v][1] < self.dist[v][0]:
                    self._swap(v)
                return True
            return False
        if d < self.dist[v][0] - RELAX_TOL:
            self._set(v, 1, self.dist[v][0], self.arc[v][0], self.prev[v][0])
            self._set(v, 0, d, a, prev)
            return True
        if d < self.dist[v][1] - RELAX_TOL:
            self._set(v, 1, d, a, prev)
            return True
        return False

    def parent(self, v: int, s: int) -> Optional[Tuple[int, int]]:
        a = self.arc[v][s]
        if a < 0:
            return None
        u = self.tails[a]
        if self.slots == 1:
            return u, 0
        for t in range(self.slots):
            if self.arc[u][t] >= 0 and self.pred(u, t) == self.prev[v][s]:
                return u, t
        return None

    def find_cycle(self) -> Optional[List[int]]:
        """
        :return: arcs of a cycle in the predecessor graph, in walking order, or None
        """
        n_states = len(self.dist)
        run_of = {}
        for v in range(n_states):
            for s in range(self.slots):
                if (v, s) in run_of or self.arc[v][s] < 0:
                    continue
                path = []
                state = (v, s)
                while state is not None and state not in run_of:
                    run_of[state] = (v, s)
                    path.append(state)
                    state = self.parent(*state)
                if state is not None and run_of[state] == (v, s):
                    loop = path[path.index(state):]
                    return [self.arc[x][y] for x, y in reversed(loop)]
        return None


def _negative_walk(net: ResidualNetwork, costs: np.ndarray, non_backtracking: bool) -> Optional[List[int]]:
    tails, heads = net.tails.tolist(), net.heads.tolist()
    order = [int(a) for a in np.argsort(net.tails, kind='stable') if np.isfinite(costs[a])]
    arc_costs = costs.tolist()
    n_states = net.root + 1
    slots = 2 if non_backtracking else 1
    labels = _Labels(n_states, slots, tails)
    labels.dist[net.root][0] = 0.0

    for _ in range(n_states * slots + 1):
        updated = False
        for a in order:
            u, v = tails[a], heads[a]
            s = labels.pick(u, v)
            du = labels.dist[u][s]
            if du == math.inf:
                continue
            if labels.offer(v, du + arc_costs[a], a, labels.pred(u, s)):
                updated = True
        if not updated:
            return None
        walk = labels.find_cycle()
        if walk is not None and sum(arc_costs[a] for a in walk) < -NEGATIVE_COST_TOL:
            return walk
    return None


def find_negative_cycles(net: ResidualNetwork, costs: np.ndarray, non_backtracking: bool = True) -> List[CostedCycle]:
    """
    Bellman-Ford from the fictitious root; arcs with infinite cost are left out. The first negative
    closed walk found is split on arc/inverse pairs and at repeated nodes, and its pieces of at least
    three arcs with a negative cost are returned. No arc appears twice in a returned cycle.

    With non_backtracking, no walk may follow an arc straight back to the node it came from, which
    keeps an arc and its inverse from forming a two-arc cycle. Without it, two distinct arcs may
    still form a cycle of their own, so two-arc pieces are kept.
    """
    walk = _negative_walk(net, costs, non_backtracking)
    if walk is None:
        return []
    min_arcs = 3 if non_backtracking else 2
    pieces = [simple for piece in split_walk(walk, net.inverse)
              for simple in split_at_repeated_nodes(piece, net.tails)]
    assert all(len(set(piece)) == len(piece) for piece in pieces), 'cycle repeats an arc'
    cycles = [net.cycle(piece, costs) for piece in pieces if len(piece) >= min_arcs]
    return [cycle for cycle in cycles if cycle.cost < -NEGATIVE_COST_TOL]


def push_on_cycle(flow: FlowAssignment, cycle: CostedCycle, delta: int) -> FlowAssignment:
    values = flow.values.copy()
    for kind, ref in zip(cycle.kinds, cycle.refs):
        if kind == ArcKind.FORWARD:
            values[ref] += delta
        elif kind == ArcKind.INVERSE:
            values[ref] -= delta
    return FlowAssignment(flow.arcs, values)


def _is_tree_flow(flow: FlowAssignment, instance: Instance) -> bool:
    pairs = flow.active_pairs()
    if len(pairs) != instance.n_turbines:
        return False
    senders = np.bincount([a for a, _ in pairs], minlength=instance.n_nodes + 1)
    if np.any(senders[1:instance.n_substations + 1] != 0) or np.any(senders[instance.n_substations + 1:] != 1):
        return False
    return is_spanning_forest(pairs, instance)


def refine(flow: FlowAssignment, instance: Instance, g: CandidateGraph,
           history: Optional[List[Dict]] = None) -> Tuple[FlowAssignment, EdgeMatrix, int]:
    """
    Negative cycle cancelling on the step-cost network. For each surplus value (the distinct
    non-zero |flow| values, ascending) the cycles of one Bellman-Ford run are tried in turn; the
    first whose push keeps a crossing-free spanning forest is committed and the search restarts.

    :param flow: feasible flow
    :param instance: problem instance
    :param g: candidate graph the flow's arcs come from
    :param history: when given, one dict per committed cycle is appended to it
    :return: (refined flow, its EdgeMatrix with cables assigned, number of committed cycles)
    """
    catalog = instance.catalog
    net = residual_network(instance, flow.arcs)
    cost = flow.cost(catalog)
    iterations = 0
    deltas = np.unique(np.abs(flow.values[flow.values != 0]))
    i = 0
    while i < len(deltas):
        delta = int(deltas[i])
        inflows = flow.substation_inflows(instance.n_substations)
        costs = residual_costs(net, flow, delta, catalog, inflows)
        committed = False
        for cycle in find_negative_cycles(net, costs):
            trial = push_on_cycle(flow, cycle, delta)
            if not _is_tree_flow(trial, instance):
                continue
            if count_crossings(trial.active_pairs(), instance) > 0:
                continue
            assert np.all(np.abs(trial.values) <= catalog.max_capacity), 'pushed flow exceeds cable capacity'
            trial_cost = trial.cost(catalog)
            if trial_cost >= cost - NEGATIVE_COST_TOL:
                logger.debug(f'Cycle {cycle.nodes} at delta {delta} does not lower the cost, skipped.')
                continue
            logger.debug(f'Cycle {cycle.nodes} at delta {delta}: cost {cost:.6f} -> {trial_cost:.6f} '
                         f'(residual {cycle.cost:.6f}).')
            if history is not None:
                history.append({'delta': delta, 'nodes': list(cycle.nodes), 'residual_cost': cycle.cost,
                                'cost_before': cost, 'cost_after': trial_cost})
            flow, cost = trial, trial_cost
            iterations += 1
            committed = True
            break
        if committed:
            deltas = np.unique(np.abs(flow.values[flow.values != 0]))
            i = 0
        else:
            i += 1

    tree = assign_cables(EdgeMatrix.from_pairs(flow.active_pairs(), instance), g, catalog)
    assert all(row.downstream == abs(flow.values[flow.arcs.locate(row.node_b, row.node_a)[0]]) for row in tree), \
        'tree counts disagree with the refined flow'
    return flow, tree, iterations


class NegativeCycleRefiningHeuristic(BaseStage):
    name = 'nccrh'

    def run(self, tree: Optional[EdgeMatrix]) -> StageResult:
        flow = flow_from_tree(tree, forward_arcs(self.graph))
        history = []
        _, refined, iterations = refine(flow, self.instance, self.graph, history=history)
        result = self.result_for(refined, iterations=iterations)
        result.extra['cycles'] = history
        self.logger.info(f'NCCRH committed {iterations} cycle(s), cost {result.cost:.4f}.')
        return result
