"""
Configuration spaces for the search loop.

A space is a list of tunable dimensions, each with a finite list of valid choices.
Files are YAML (or JSON, which YAML parses too):

    config_space:
      - key: tp
        type: int
        choices: [1, 2, 4]
        description: tensor-parallel degree
      - key: overlap
        type: bool
    seed: {tp: 4, overlap: false}
"""

import itertools
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Iterator

import yaml

from tracekit.errors import SearchConfigError

logger = logging.getLogger(__name__)

DIMENSION_TYPES = ("int", "bool", "enum")


def _valid_value(dim_type: str, value: Any) -> bool:
    if dim_type == "bool":
        return isinstance(value, bool)
    if dim_type == "int":
        return isinstance(value, int) and not isinstance(value, bool)
    return isinstance(value, str)


@dataclass(frozen=True)
class Dimension:
    key: str
    type: str
    choices: tuple
    description: str = ""

    def __post_init__(self):
        if self.type not in DIMENSION_TYPES:
            raise SearchConfigError(f"dimension {self.key!r} has type {self.type!r}; expected one of {DIMENSION_TYPES}")
        if not self.choices:
            raise SearchConfigError(f"dimension {self.key!r} has no choices")
        bad = [c for c in self.choices if not _valid_value(self.type, c)]
        if bad:
            raise SearchConfigError(f"dimension {self.key!r} ({self.type}) has invalid choices {bad}")
        if len(set(self.choices)) != len(self.choices):
            raise SearchConfigError(f"dimension {self.key!r} repeats a choice")

    def accepts(self, value: Any) -> bool:
        return _valid_value(self.type, value) and value in self.choices

    def to_dict(self) -> dict:
        return {"key": self.key, "type": self.type, "choices": list(self.choices), "description": self.description}


@dataclass(frozen=True)
class ConfigSpace:
    dimensions: tuple[Dimension, ...]
    seed: dict | None = field(default=None, compare=False)

    def __post_init__(self):
        keys = self.keys
        if len(set(keys)) != len(keys):
            raise SearchConfigError(f"duplicate dimension keys in {keys}")
        if self.seed is not None and not self.contains(self.seed):
            raise SearchConfigError(f"seed config {self.seed} is outside the space")

    @property
    def keys(self) -> list[str]:
        return [d.key for d in self.dimensions]

    @property
    def size(self) -> int:
        total = 1
        for d in self.dimensions:
            total *= len(d.choices)
        return total

    def dimension(self, key: str) -> Dimension:
        for d in self.dimensions:
            if d.key == key:
                return d
        raise ValueError(f"Dimension '{key}' is not in the space. Available dimensions: {self.keys}")

    def contains(self, config: Any) -> bool:
        if not isinstance(config, dict) or set(config) != set(self.keys):
            return False
        return all(d.accepts(config[d.key]) for d in self.dimensions)

    def seed_config(self) -> dict:
        """Explicit seed when given, else the first choice of every dimension."""
        if self.seed is not None:
            return dict(self.seed)
        return {d.key: d.choices[0] for d in self.dimensions}

    def enumerate(self) -> Iterator[dict]:
        for combo in itertools.product(*(d.choices for d in self.dimensions)):
            yield dict(zip(self.keys, combo))

    def config_key(self, config: dict) -> tuple:
        """Hashable identity of a config, in dimension order."""
        return tuple(config.get(k) for k in self.keys)

    def to_dict(self) -> dict:
        out: dict = {"config_space": [d.to_dict() for d in self.dimensions]}
        if self.seed is not None:
            out["seed"] = dict(self.seed)
        return out

    @classmethod
    def from_dict(cls, data: dict | list) -> "ConfigSpace":
        entries = data if isinstance(data, list) else data.get("config_space")
        if not entries:
            raise SearchConfigError("config space declares no dimensions")
        dims = []
        for entry in entries:
            if "key" not in entry:
                raise SearchConfigError(f"dimension without a key: {entry}")
            dim_type = entry.get("type", "enum")
            choices = entry.get("choices")
            if choices is None and dim_type == "bool":
                choices = [False, True]
            dims.append(Dimension(entry["key"], dim_type, tuple(choices or ()), entry.get("description", "")))
        seed = None if isinstance(data, list) else data.get("seed")
        return cls(tuple(dims), seed)


def load_space(path: str | Path) -> ConfigSpace:
    """
    Read a config space from YAML or JSON.

    Raises:
        SearchConfigError: Unreadable file or invalid space
    """
    try:
        with open(path) as f:
            data = yaml.safe_load(f)
    except (OSError, yaml.YAMLError) as e:
        raise SearchConfigError(f"cannot read config space {path}: {e}") from e
    space = ConfigSpace.from_dict(data or {})
    logger.info("Loaded config space %s: %d dimensions, %d configs", path, len(space.dimensions), space.size)
    return space
