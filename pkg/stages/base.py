from abc import ABC, abstractmethod
from dataclasses import dataclass, field
import logging
import math
from typing import Dict, Optional

from candidate_graph import CandidateGraph
from model import EdgeMatrix, Instance
from time_utils import Stopwatch, break_after
from utils import count_crossings


@dataclass
class StageResult:
    stage: str
    tree: EdgeMatrix
    cost: float
    crossings: int
    time_ms: float = 0.0
    iterations: int = 0
    infeasible: bool = False
    timed_out: bool = False
    extra: Dict = field(default_factory=dict)

    @property
    def feasible(self) -> bool:
        return not self.infeasible and self.crossings == 0

    @property
    def display(self) -> str:
        if self.crossings > 0:
            return f'Inf-{self.crossings}cr.'
        return f'{self.cost:.2f}'


class BaseStage(ABC):
    name = 'base'

    def __init__(self, instance: Instance, graph: CandidateGraph, time_limit: Optional[float] = None):
        """
        :param instance: problem instance
        :param graph: candidate graph built from the instance
        :param time_limit: seconds before the stage gives up, None for no limit
        """
        self.instance = instance
        self.graph = graph
        self.time_limit = time_limit
        self.logger = logging.getLogger(__name__)

    @abstractmethod
    def run(self, tree: Optional[EdgeMatrix]) -> StageResult:
        """
        :param tree: design produced by the previous stage (None for the constructive stage)
        :return: StageResult with the stage's design, its cost and crossing count
        """
        pass

    def on_timeout(self, tree: Optional[EdgeMatrix]) -> StageResult:
        """
        Result reported when the stage runs out of time. Defaults to handing the input back unchanged.
        """
        return self.result_for(tree, timed_out=True)

    def result_for(self, tree: EdgeMatrix, **kwargs) -> StageResult:
        cost = tree.total_cost(self.instance.catalog) if tree.is_assigned else math.inf
        return StageResult(self.name, tree, cost, count_crossings(tree.pairs(), self.instance), **kwargs)

    def run_timed(self, tree: Optional[EdgeMatrix] = None) -> StageResult:
        watch = Stopwatch()
        result = break_after(self.time_limit, fallback_func=self.on_timeout)(self.run)(tree)
        result.time_ms = watch.elapsed_ms()
        return result
