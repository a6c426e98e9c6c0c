"""What-if utility of doubling one network resource."""

import logging
from dataclasses import dataclass, field
from typing import Iterable

from tracekit.sim.graph import ExecutionGraph
from tracekit.sim.network import NetworkConfig, Resource
from tracekit.sim.replay import ReplayMode, replay

logger = logging.getLogger(__name__)

SINGLE_BOTTLENECK_NOTE = "collectives spanning several scale-up domains pay scale-out bandwidth for the whole operation"


@dataclass(frozen=True)
class WhatIfResult:
    resource: Resource
    baseline_step_time: float
    simulated_step_time: float
    utility: float
    notes: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "resource": str(self.resource),
            "baseline_step_time": self.baseline_step_time,
            "simulated_step_time": self.simulated_step_time,
            "utility": self.utility,
            "notes": dict(self.notes),
        }


def utility(graph: ExecutionGraph, net: NetworkConfig, resource: Resource | str) -> WhatIfResult:
    """
    (T - T2x) / T * 100, both step times replayed with the ring model.

    A zero baseline step time yields zero utility.
    """
    resource = Resource(resource)
    baseline = replay(graph, net, ReplayMode.MODELED)
    doubled = replay(graph, net.doubled(resource), ReplayMode.MODELED)
    t, t2x = baseline.step_time_ns, doubled.step_time_ns
    value = (t - t2x) / t * 100 if t else 0.0
    logger.info("Utility of doubling %s: %.3f%% (%d ns -> %d ns)", resource, value, t, t2x)
    return WhatIfResult(
        resource,
        baseline.step_time,
        doubled.step_time,
        value,
        notes={"baseline_mode": str(ReplayMode.MODELED), "model": SINGLE_BOTTLENECK_NOTE},
    )


def whatif(
    graph: ExecutionGraph, net: NetworkConfig, resources: Iterable[Resource | str] = tuple(Resource)
) -> list[WhatIfResult]:
    return [utility(graph, net, resource) for resource in resources]
