"""
Discrete-event replay of an execution graph.

Compute and gap nodes take their recorded durations. A collective group instance
starts once every member rank has reached it and completes on all members at the
same instant; its duration is either the shortest measured member duration or the
ring model's estimate under a NetworkConfig. Ties in the event queue break by node
id, so results do not depend on processing order.
"""

import heapq
import logging
from collections import defaultdict
from dataclasses import dataclass, field
from enum import StrEnum

from tracekit.errors import DeadlockDetected
from tracekit.sim.graph import ExecutionGraph, Node, NodeKind
from tracekit.sim.network import NetworkConfig
from tracekit.utils.collectives import ring_factor
from tracekit.utils.time import ns_to_seconds

logger = logging.getLogger(__name__)


class ReplayMode(StrEnum):
    MEASURED = "Measured"
    MODELED = "Modeled"


@dataclass(frozen=True)
class ReplayResult:
    makespans: dict[int, int]
    finish_ns: dict[int, int] = field(repr=False)

    @property
    def step_time_ns(self) -> int:
        return max(self.makespans.values(), default=0)

    @property
    def step_time(self) -> float:
        """Step time in seconds."""
        return ns_to_seconds(self.step_time_ns)


def comm_time_model(node: Node, net: NetworkConfig) -> float:
    """
    Ring-model duration of one collective node, in seconds.

    latency + bytes * factor(kind, N) / bandwidth, with the scale-up tier when every
    member shares one scale-up domain and the scale-out tier otherwise.
    """
    comm = node.comm
    n = comm.group_size
    if n <= 1:
        return 0.0
    members = comm.members or (node.rank,)
    if net.single_domain(n, members):
        bandwidth, latency = net.scale_up_bandwidth, net.scale_up_latency
    else:
        bandwidth, latency = net.scale_out_bandwidth, net.scale_out_latency
    return latency + comm.bytes * ring_factor(comm.kind, n) / (bandwidth * 1e9)


def replay(graph: ExecutionGraph, net: NetworkConfig | None = None, mode: ReplayMode | str = ReplayMode.MEASURED
           ) -> ReplayResult:
    """
    Simulate one step of the graph.

    Args:
        graph: Execution graph
        net: Network model, required for Modeled mode
        mode: Measured keeps recorded collective durations; Modeled recomputes them

    Returns:
        ReplayResult with per-rank makespans and every node's finish time

    Raises:
        DeadlockDetected: Some nodes never became ready
    """
    mode = ReplayMode(mode)
    if mode == ReplayMode.MODELED and net is None:
        raise ValueError("Modeled replay needs a NetworkConfig")

    nodes = {node.id: node for node in graph.nodes()}
    successors: dict[int, list[int]] = defaultdict(list)
    pending: dict[int, int] = dict.fromkeys(nodes, 0)
    for rank in graph.ranks:
        for src, dst in rank.edges:
            successors[src].append(dst)
            pending[dst] += 1

    members: dict[int, list[int]] = defaultdict(list)
    for node in nodes.values():
        if node.comm is not None:
            members[node.comm.group].append(node.id)

    ready_at: dict[int, int] = dict.fromkeys(nodes, 0)
    finish: dict[int, int] = {}
    arrived: dict[int, list[int]] = defaultdict(list)
    queue = [(0, node_id) for node_id, count in pending.items() if count == 0]
    heapq.heapify(queue)

    def complete(node_id: int, at: int) -> None:
        finish[node_id] = at
        for succ in successors[node_id]:
            ready_at[succ] = max(ready_at[succ], at)
            pending[succ] -= 1
            if pending[succ] == 0:
                heapq.heappush(queue, (ready_at[succ], succ))

    while queue:
        now, node_id = heapq.heappop(queue)
        node = nodes[node_id]
        if node.kind != NodeKind.COMM_COLL:
            complete(node_id, now + node.dur_ns)
            continue
        group = node.comm.group
        arrived[group].append(node_id)
        if len(arrived[group]) < len(members[group]):
            continue
        # the last arrival pops last, so ``now`` is the latest arrival time
        if mode == ReplayMode.MEASURED:
            duration = min(nodes[m].dur_ns for m in members[group])
        else:
            duration = round(comm_time_model(node, net) * 1e9)
        for member in sorted(arrived[group]):
            complete(member, now + duration)

    if len(finish) < len(nodes):
        stuck = sorted(set(nodes) - set(finish))
        raise DeadlockDetected(f"{len(stuck)} node(s) never became ready, first ids {stuck[:5]}")

    makespans = {
        rank.rank: max((finish[n.id] for n in rank.nodes), default=0) for rank in graph.ranks
    }
    logger.debug("Replay (%s): step %d ns over %d ranks", mode, max(makespans.values(), default=0), len(makespans))
    return ReplayResult(makespans, finish)
