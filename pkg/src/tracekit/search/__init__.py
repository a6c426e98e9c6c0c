from tracekit.search.executors import (
    EXECUTOR_REGISTRY,
    ExecutionOutcome,
    Executor,
    SimExecutor,
    TableExecutor,
    device_count,
    get_executor,
    register_executor,
)
from tracekit.search.loop import SearchHistory, SearchTrial, run_search
from tracekit.search.objectives import Composite, MinimizeMetric, Objective, load_objective, objective_from_dict
from tracekit.search.proposers import (
    PROPOSER_REGISTRY,
    CoordinateHillClimb,
    ExternalCommand,
    GridSearch,
    Proposer,
    RandomSearch,
    get_proposer,
    register_proposer,
)
from tracekit.search.space import ConfigSpace, Dimension, load_space

__all__ = [
    "EXECUTOR_REGISTRY",
    "ExecutionOutcome",
    "Executor",
    "SimExecutor",
    "TableExecutor",
    "device_count",
    "get_executor",
    "register_executor",
    "SearchHistory",
    "SearchTrial",
    "run_search",
    "Composite",
    "MinimizeMetric",
    "Objective",
    "load_objective",
    "objective_from_dict",
    "PROPOSER_REGISTRY",
    "CoordinateHillClimb",
    "ExternalCommand",
    "GridSearch",
    "Proposer",
    "RandomSearch",
    "get_proposer",
    "register_proposer",
    "ConfigSpace",
    "Dimension",
    "load_space",
]
