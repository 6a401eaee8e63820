import logging

from stages.ccrh import CrossingsRepairHeuristic
from stages.nccrh import NegativeCycleRefiningHeuristic
from stages.tsh import TwoStepsHeuristic


logger = logging.getLogger(__name__)

STAGES = {stage.name: stage for stage in (TwoStepsHeuristic, CrossingsRepairHeuristic, NegativeCycleRefiningHeuristic)}


class UnknownStage(Exception):
    def __init__(self, value='Unknown stage'):
        self.value = value

    def __str__(self):
        return repr(self.value)


def stage_by_name(stage_name, *args, **kwargs):
    if stage_name not in STAGES:
        error_msg = f'Invalid stage name provided --> {stage_name}'
        logger.error(error_msg)
        raise UnknownStage(error_msg)
    return STAGES[stage_name](*args, **kwargs)
