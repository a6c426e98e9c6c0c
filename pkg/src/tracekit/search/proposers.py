"""
Configuration proposers.

A proposer returns the next configuration to try given the space and the full
history so far, and is told about every finished trial through ``update``.
"""

import json
import logging
import shlex
import subprocess
from typing import Type

import numpy as np

from tracekit.errors import ProposerError
from tracekit.search.loop import SearchHistory
from tracekit.search.space import ConfigSpace

logger = logging.getLogger(__name__)


class Proposer:
    """Base class: subclasses implement ``propose``."""

    def propose(self, space: ConfigSpace, history: SearchHistory) -> dict:
        raise NotImplementedError("propose not implemented")

    def update(self, history: SearchHistory) -> None:
        pass


PROPOSER_REGISTRY: dict[str, Type[Proposer]] = {}


def register_proposer(name):
    """Decorator to register a proposer class under a name."""

    def decorator(cls):
        PROPOSER_REGISTRY[name] = cls
        return cls

    return decorator


def get_proposer(name, **kwargs) -> Proposer:
    """
    Instantiate a registered proposer.

    Raises:
        ValueError: If the proposer name is not found in the registry.
    """
    if name not in PROPOSER_REGISTRY:
        available = list(PROPOSER_REGISTRY.keys())
        raise ValueError(f"Proposer '{name}' is not registered. Available proposers: {available}")
    return PROPOSER_REGISTRY[name](**kwargs)


def _random_config(space: ConfigSpace, rng: np.random.Generator) -> dict:
    return {d.key: d.choices[int(rng.integers(len(d.choices)))] for d in space.dimensions}


@register_proposer("random")
class RandomSearch(Proposer):
    def __init__(self, seed: int = 0):
        self.rng = np.random.default_rng(seed)

    def propose(self, space: ConfigSpace, history: SearchHistory) -> dict:
        return _random_config(space, self.rng)


@register_proposer("grid")
class GridSearch(Proposer):
    """Enumerates the space in dimension order, wrapping around when exhausted."""

    def __init__(self, seed: int = 0):
        self._configs: list[dict] | None = None

    def propose(self, space: ConfigSpace, history: SearchHistory) -> dict:
        if self._configs is None:
            self._configs = list(space.enumerate())
        return dict(self._configs[len(history) % len(self._configs)])


@register_proposer("hillclimb")
class CoordinateHillClimb(Proposer):
    """
    Coordinate-wise hill climbing around the best trial so far.

    Starts from the space's seed config (or a random one with ``random_start``), then
    proposes untried configs that differ from the current best in exactly one
    dimension, sweeping dimensions cyclically. When no single-dimension move is left
    untried the climb restarts from a random untried config.
    """

    def __init__(self, seed: int = 0, random_start: bool = False):
        self.rng = np.random.default_rng(seed)
        self.random_start = random_start
        self._dim = 0

    def propose(self, space: ConfigSpace, history: SearchHistory) -> dict:
        if not len(history):
            return _random_config(space, self.rng) if self.random_start else space.seed_config()

        tried = {space.config_key(t.config) for t in history}
        best = history.best()
        if best is not None and space.contains(best.config):
            center = best.config
            n = len(space.dimensions)
            for offset in range(n):
                i = (self._dim + offset) % n
                dim = space.dimensions[i]
                for value in dim.choices:
                    candidate = {**center, dim.key: value}
                    if space.config_key(candidate) not in tried:
                        self._dim = i
                        return candidate
            logger.info("No single-dimension move improves on %s; restarting", center)

        untried = [c for c in space.enumerate() if space.config_key(c) not in tried]
        if not untried:
            return dict(best.config) if best is not None else space.seed_config()
        return untried[int(self.rng.integers(len(untried)))]


@register_proposer("external")
class ExternalCommand(Proposer):
    """
    Delegates proposals to a child process.

    The child reads one JSON line ``{"iteration", "space", "history"}`` on stdin and
    answers with one JSON line ``{"config": {...}}`` on stdout.
    """

    def __init__(self, cmd: str | list[str], timeout: float = 300.0, seed: int = 0):
        self.cmd = shlex.split(cmd) if isinstance(cmd, str) else list(cmd)
        if not self.cmd:
            raise ValueError("external proposer needs a command")
        self.timeout = timeout

    def propose(self, space: ConfigSpace, history: SearchHistory) -> dict:
        request = {"iteration": len(history), "space": space.to_dict(), "history": history.to_dicts()}
        try:
            done = subprocess.run(
                self.cmd,
                input=json.dumps(request, sort_keys=True) + "\n",
                capture_output=True,
                text=True,
                timeout=self.timeout,
            )
        except (OSError, subprocess.TimeoutExpired) as e:
            raise ProposerError(f"cannot run {self.cmd[0]}: {e}") from e
        if done.returncode != 0:
            raise ProposerError(f"{self.cmd[0]} exited with status {done.returncode}: {done.stderr.strip()}")
        lines = [line for line in done.stdout.splitlines() if line.strip()]
        if not lines:
            raise ProposerError(f"{self.cmd[0]} printed no response")
        try:
            response = json.loads(lines[0])
        except json.JSONDecodeError as e:
            raise ProposerError(f"malformed response from {self.cmd[0]}: {e}") from e
        if not isinstance(response, dict) or not isinstance(response.get("config"), dict):
            raise ProposerError(f"response from {self.cmd[0]} has no config object")
        return response["config"]
