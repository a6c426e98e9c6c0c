"""
Search objectives. Every score is in maximize form.

    MinimizeMetric(key):      score = -value(key)
    Composite(w, t0, n0):     score = w * t0 / T + (1 - w) * n0 / N

with T the average step time and N the device count of the trial.
"""

import logging
from dataclasses import dataclass
from pathlib import Path

import yaml

from tracekit.errors import SearchConfigError
from tracekit.metrics.registry import METRIC_REGISTRY
from tracekit.search.executors import ExecutionOutcome, device_count

logger = logging.getLogger(__name__)

STEP_TIME_KEY = "avg_step_time"


class MissingObjectiveMetric(KeyError):
    pass


class Objective:
    kind = ""

    def score(self, outcome: ExecutionOutcome, config: dict) -> float:
        raise NotImplementedError("score not implemented")

    def raw(self, outcome: ExecutionOutcome) -> float | None:
        """The metric the objective is driven by, as reported."""
        return outcome.metrics.get(STEP_TIME_KEY)

    def to_dict(self) -> dict:
        raise NotImplementedError("to_dict not implemented")


def _metric(outcome: ExecutionOutcome, key: str) -> float:
    if key not in outcome.metrics:
        raise MissingObjectiveMetric(key)
    return outcome.metrics[key]


def _known_metric(key: str) -> bool:
    return key in METRIC_REGISTRY or key.startswith("traffic_volume_")


@dataclass(frozen=True)
class MinimizeMetric(Objective):
    key: str = STEP_TIME_KEY
    kind = "MinimizeMetric"

    def __post_init__(self):
        if not _known_metric(self.key):
            raise SearchConfigError(
                f"Metric '{self.key}' is not registered. Available metrics: {list(METRIC_REGISTRY)}"
            )

    def score(self, outcome: ExecutionOutcome, config: dict) -> float:
        return -_metric(outcome, self.key)

    def raw(self, outcome: ExecutionOutcome) -> float | None:
        return outcome.metrics.get(self.key)

    def to_dict(self) -> dict:
        return {"kind": self.kind, "key": self.key}


@dataclass(frozen=True)
class Composite(Objective):
    w: float
    t0: float
    n0: float
    kind = "Composite"

    def __post_init__(self):
        if not 0 <= self.w <= 1:
            raise SearchConfigError(f"composite weight must lie in [0, 1], got {self.w}")
        if self.t0 <= 0 or self.n0 <= 0:
            raise SearchConfigError("composite baselines t0 and n0 must be > 0")

    @staticmethod
    def devices(outcome: ExecutionOutcome, config: dict) -> int:
        return outcome.devices if outcome.devices is not None else device_count(config)

    def score(self, outcome: ExecutionOutcome, config: dict) -> float:
        t = _metric(outcome, STEP_TIME_KEY)
        n = self.devices(outcome, config)
        return self.w * self.t0 / t + (1 - self.w) * self.n0 / n

    def to_dict(self) -> dict:
        return {"kind": self.kind, "w": self.w, "t0": self.t0, "n0": self.n0}


def objective_from_dict(data: dict) -> Objective:
    kind = data.get("kind", "MinimizeMetric")
    try:
        if kind == "MinimizeMetric":
            return MinimizeMetric(data.get("key", STEP_TIME_KEY))
        if kind == "Composite":
            return Composite(float(data["w"]), float(data["t0"]), float(data["n0"]))
    except KeyError as e:
        raise SearchConfigError(f"composite objective is missing {e}") from e
    raise SearchConfigError(
        f"Objective '{kind}' is not supported. Available objectives: ['MinimizeMetric', 'Composite']"
    )


def load_objective(path: str | Path) -> Objective:
    try:
        with open(path) as f:
            data = yaml.safe_load(f)
    except (OSError, yaml.YAMLError) as e:
        raise SearchConfigError(f"cannot read objective {path}: {e}") from e
    return objective_from_dict(data or {})
