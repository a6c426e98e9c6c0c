"""
The propose, execute, score, update loop.

Every attempt counts against the budget, failed ones included. Trials are appended
to a JSONL history file as soon as they finish, so an interrupted search loses at
most the trial in flight. Succeeded trials can also leave their profile behind as a
benchmark entry document.

Example:
    >>> history = run_search(space, MinimizeMetric(), get_proposer("grid"), executor, budget=27)
    >>> history.best().config
    {'tp': 4, 'dp': 1, 'pp': 4}
"""

import json
import logging
import os
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

from tracekit.errors import ProposerError, SearchConfigError
from tracekit.search.executors import ExecutionOutcome, Executor
from tracekit.search.objectives import Composite, MissingObjectiveMetric, Objective
from tracekit.search.space import ConfigSpace

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class SearchTrial:
    iteration: int
    config: dict[str, Any]
    metrics: dict[str, float] = field(default_factory=dict)
    devices: int | None = None
    score: float | None = None
    failure: str | None = None
    wall_time: float | None = None
    entry_paths: tuple[str, ...] = ()

    def __post_init__(self):
        if self.failure is not None and self.score is not None:
            raise ValueError("failed trials carry no score")

    @property
    def succeeded(self) -> bool:
        return self.failure is None

    @property
    def status(self) -> str:
        return "Succeeded" if self.succeeded else "Failed"

    def to_dict(self) -> dict:
        out = {
            "iteration": self.iteration,
            "config": self.config,
            "status": self.status,
            "metrics": self.metrics,
            "devices": self.devices,
            "score": self.score,
            "failure": self.failure,
            "entry_paths": list(self.entry_paths),
        }
        if self.wall_time is not None:
            out["wall_time"] = self.wall_time
        return out

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_dict(cls, data: dict) -> "SearchTrial":
        return cls(
            iteration=data["iteration"],
            config=dict(data["config"]),
            metrics=dict(data.get("metrics", {})),
            devices=data.get("devices"),
            score=data.get("score"),
            failure=data.get("failure"),
            wall_time=data.get("wall_time"),
            entry_paths=tuple(data.get("entry_paths", ())),
        )


@dataclass
class SearchHistory:
    trials: list[SearchTrial] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.trials)

    def __iter__(self):
        return iter(self.trials)

    def succeeded(self) -> list[SearchTrial]:
        return [t for t in self.trials if t.succeeded]

    def best(self) -> SearchTrial | None:
        """Highest-scoring succeeded trial; the earliest wins ties."""
        best = None
        for trial in self.succeeded():
            if best is None or trial.score > best.score:
                best = trial
        return best

    def running_best(self) -> list[float | None]:
        """Best score seen after each iteration (None until a trial succeeds)."""
        out, current = [], None
        for trial in self.trials:
            if trial.succeeded and (current is None or trial.score > current):
                current = trial.score
            out.append(current)
        return out

    def pareto(self, step_key: str = "avg_step_time") -> list[SearchTrial]:
        """Succeeded trials not dominated in (step time, devices), both minimized."""
        points = [t for t in self.succeeded() if step_key in t.metrics and t.devices is not None]
        front = []
        for t in points:
            dominated = any(
                o.metrics[step_key] <= t.metrics[step_key]
                and o.devices <= t.devices
                and (o.metrics[step_key] < t.metrics[step_key] or o.devices < t.devices)
                for o in points
            )
            if not dominated:
                front.append(t)
        return front

    def to_dicts(self) -> list[dict]:
        return [t.to_dict() for t in self.trials]

    def to_jsonl(self) -> str:
        return "".join(t.to_json() + "\n" for t in self.trials)

    @classmethod
    def from_jsonl(cls, path: str | Path) -> "SearchHistory":
        with open(path) as f:
            return cls([SearchTrial.from_dict(json.loads(line)) for line in f if line.strip()])


def _score(objective: Objective, outcome: ExecutionOutcome, config: dict) -> tuple[float | None, str | None]:
    try:
        return objective.score(outcome, config), None
    except MissingObjectiveMetric as e:
        return None, f"MissingMetric: {e.args[0]}"
    except ZeroDivisionError:
        return None, "ZeroScoreDenominator"


def _record_entry(outcome: ExecutionOutcome, iteration: int, entries_dir, history_path) -> tuple[str, ...]:
    if entries_dir is None or outcome.profile is None:
        return ()
    path = Path(entries_dir) / f"trial_{iteration:04d}.json"
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(outcome.profile.to_json())
    if history_path is not None:
        return (os.path.relpath(path, Path(history_path).parent),)
    return (str(path),)


def run_search(
    space: ConfigSpace,
    objective: Objective,
    proposer,
    executor: Executor,
    budget: int,
    history_path: str | Path | None = None,
    record_timing: bool = False,
    entries_dir: str | Path | None = None,
) -> SearchHistory:
    """
    Run ``budget`` trials.

    Args:
        space: Configuration space
        objective: Scoring rule
        proposer: Object with ``propose(space, history)`` and ``update(history)``
        executor: Executor bound to the workload
        budget: Number of attempts, failures included
        history_path: JSONL file rewritten from scratch and appended after each trial
        record_timing: Store per-trial wall time (makes histories differ run to run)
        entries_dir: Directory receiving one profile document per succeeded trial; the
            history refers to it relative to the history file when there is one

    Raises:
        SearchConfigError: budget < 1
    """
    if budget < 1:
        raise SearchConfigError(f"search budget must be >= 1, got {budget}")

    history = SearchHistory()
    sink = None
    if history_path is not None:
        Path(history_path).parent.mkdir(parents=True, exist_ok=True)
        sink = open(history_path, "w")
    try:
        for iteration in range(budget):
            started = time.perf_counter()
            config: dict = {}
            try:
                config = proposer.propose(space, history)
            except ProposerError as e:
                outcome = ExecutionOutcome.failed(f"ProposerError: {e}")
            else:
                if not space.contains(config):
                    outcome = ExecutionOutcome.failed("InvalidConfig")
                    config = config if isinstance(config, dict) else {}
                else:
                    try:
                        outcome = executor.execute(dict(config))
                    except Exception as e:
                        logger.exception("Executor failed on %s", config)
                        outcome = ExecutionOutcome.failed(f"{type(e).__name__}: {e}")

            score, failure = None, outcome.failure
            if outcome.succeeded:
                score, failure = _score(objective, outcome, config)
            devices = outcome.devices
            if devices is None and isinstance(objective, Composite) and outcome.succeeded:
                devices = Composite.devices(outcome, config)

            trial = SearchTrial(
                iteration=iteration,
                config=dict(config),
                metrics=dict(outcome.metrics),
                devices=devices,
                score=score,
                failure=failure,
                wall_time=time.perf_counter() - started if record_timing else None,
                entry_paths=_record_entry(outcome, iteration, entries_dir, history_path) if failure is None else (),
            )
            history.trials.append(trial)
            if sink is not None:
                sink.write(trial.to_json() + "\n")
                sink.flush()
            logger.info("Trial %d %s: %s score=%s", iteration, trial.status, config, score)
            proposer.update(history)
    finally:
        if sink is not None:
            sink.close()
    return history
