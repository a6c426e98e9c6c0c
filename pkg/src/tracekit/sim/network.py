"""
Two-tier network model for what-if replay.

Ranks ``r`` and ``r'`` share a scale-up domain iff ``r // domain == r' // domain``.
A collective whose members all sit in one domain (and whose group size fits in it)
runs at scale-up bandwidth and latency; anything else pays the scale-out tier for
the whole operation. Only the ring algorithm is modelled.
"""

import json
import logging
from dataclasses import asdict, dataclass, replace
from enum import StrEnum
from pathlib import Path
from typing import Iterable

from tracekit.card.schema import WorkloadCard

logger = logging.getLogger(__name__)

GBIT_PER_GBYTE = 8


class Resource(StrEnum):
    SCALE_OUT_BANDWIDTH = "ScaleOutBandwidth"
    SCALE_UP_BANDWIDTH = "ScaleUpBandwidth"
    SCALE_UP_DOMAIN_SIZE = "ScaleUpDomainSize"


@dataclass(frozen=True)
class NetworkConfig:
    """Configuration of the simulated interconnect."""

    # unidirectional bandwidth per rank, decimal GB/s
    scale_up_bandwidth: float
    scale_out_bandwidth: float
    # ranks per scale-up domain
    scale_up_domain_size: int = 1
    # per-message latency, seconds
    scale_up_latency: float = 0.0
    scale_out_latency: float = 0.0
    algorithm: str = "Ring"

    def __post_init__(self):
        if not (self.scale_up_bandwidth > 0 and self.scale_out_bandwidth > 0):
            raise ValueError("network bandwidths must be > 0")
        if int(self.scale_up_domain_size) != self.scale_up_domain_size or self.scale_up_domain_size < 1:
            raise ValueError(f"scale-up domain size must be an integer >= 1, got {self.scale_up_domain_size}")
        if self.scale_up_latency < 0 or self.scale_out_latency < 0:
            raise ValueError("latencies must be >= 0")
        if self.algorithm != "Ring":
            raise ValueError(f"Unsupported collective algorithm {self.algorithm!r}. Available algorithms: ['Ring']")

    def domain_of(self, rank: int) -> int:
        return rank // self.scale_up_domain_size

    def single_domain(self, group_size: int, members: Iterable[int]) -> bool:
        """True when a group of ``group_size`` ranks fits one scale-up domain."""
        if group_size > self.scale_up_domain_size:
            return False
        return len({self.domain_of(r) for r in members}) <= 1

    def doubled(self, resource: Resource | str) -> "NetworkConfig":
        resource = Resource(resource)
        if resource == Resource.SCALE_OUT_BANDWIDTH:
            return replace(self, scale_out_bandwidth=self.scale_out_bandwidth * 2)
        if resource == Resource.SCALE_UP_BANDWIDTH:
            return replace(self, scale_up_bandwidth=self.scale_up_bandwidth * 2)
        return replace(self, scale_up_domain_size=self.scale_up_domain_size * 2)

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "NetworkConfig":
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"Unknown network keys {sorted(unknown)}. Available keys: {sorted(known)}")
        return cls(**data)

    @classmethod
    def from_json(cls, path: str | Path) -> "NetworkConfig":
        with open(path) as f:
            return cls.from_dict(json.load(f))

    @classmethod
    def from_card(cls, card: WorkloadCard, **overrides) -> "NetworkConfig":
        """
        Network declared by a workload card.

        ``bandwidth_gbps`` is read as [scale-out, scale-up] Gbit/s and converted to GB/s;
        the scale-up domain is ``count_per_node``. Keyword overrides win.

        Raises:
            ValueError: The card declares no bandwidths and no override supplies them
        """
        topo = card.hardware.network_topo
        values: dict = {
            "scale_out_bandwidth": None if topo.scale_out_gbps is None else topo.scale_out_gbps / GBIT_PER_GBYTE,
            "scale_up_bandwidth": None if topo.scale_up_gbps is None else topo.scale_up_gbps / GBIT_PER_GBYTE,
            "scale_up_domain_size": card.xpu.count_per_node or 1,
        }
        values.update({k: v for k, v in overrides.items() if v is not None})
        missing = [k for k in ("scale_out_bandwidth", "scale_up_bandwidth") if values.get(k) is None]
        if missing:
            raise ValueError(
                f"network config needs {missing}; set workload.hardware.network_topo.bandwidth_gbps or pass them"
            )
        return cls(**values)
