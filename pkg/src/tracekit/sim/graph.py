"""
Execution graphs built from one step of a trace.

Every device stream of every rank becomes a lane: a chain of nodes in timeline
order. Kernels become CompNodes with their measured durations, collectives become
CommCollNodes carrying kind, message size and a group id shared by the matching
instances on other ranks, and idle time on the lane (including the lead-in from
the window start and the tail up to the window end) becomes GapNodes. Edges only
sequence nodes within a lane; true inter-stream causality is not recoverable from
these traces.

Key Features:
    - Deterministic node ids (rank, then lane name, then time order)
    - Cross-rank collective matching by (kind, group size, group ranks, occurrence)
    - Unsized collectives degrade to fixed-duration CompNodes with a tally
    - Collective order checked across ranks when a graph is built or imported
    - Lossless JSON export/import with stable key order

Example:
    >>> graph = build_graph(trace, card)
    >>> graph.num_nodes, len(graph.groups)
    (42, 6)
    >>> export_graph(graph) == export_graph(import_graph(export_graph(graph)))
    True
"""

import json
import logging
from collections import defaultdict
from dataclasses import dataclass, field, replace
from enum import StrEnum
from pathlib import Path

from tracekit.card.schema import WorkloadCard
from tracekit.errors import CollectiveMatchFailure, NoStepWindows
from tracekit.trace.model import KERNEL_CLASSES, CollectiveKind, EventClass, NormalizedTrace, RankTimeline, StepKind

logger = logging.getLogger(__name__)

# largest share of partially matched collective instances tolerated at build
DEFAULT_MATCH_TOLERANCE = 0.10
IDLE_LANE = "idle"


class NodeKind(StrEnum):
    COMP = "CompNode"
    COMM_COLL = "CommCollNode"
    GAP = "GapNode"


@dataclass(frozen=True)
class CommAttrs:
    kind: CollectiveKind
    bytes: int
    group: int
    group_size: int
    members: tuple[int, ...] = ()


@dataclass(frozen=True)
class Node:
    id: int
    rank: int
    kind: NodeKind
    dur_ns: int
    stream: str
    name: str = ""
    comm: CommAttrs | None = None

    def to_dict(self) -> dict:
        out = {"id": self.id, "kind": str(self.kind), "dur_ns": self.dur_ns, "stream": self.stream, "name": self.name}
        if self.comm is not None:
            out["comm"] = {
                "kind": str(self.comm.kind),
                "bytes": self.comm.bytes,
                "group": self.comm.group,
                "group_size": self.comm.group_size,
            }
        return out


@dataclass(frozen=True)
class RankGraph:
    rank: int
    step_ns: int
    nodes: tuple[Node, ...]
    edges: tuple[tuple[int, int], ...]


@dataclass(frozen=True)
class ExecutionGraph:
    ranks: tuple[RankGraph, ...]
    groups: dict[int, tuple[int, ...]]
    collectives: int = 0
    unsized_collectives: int = 0
    notes: dict = field(default_factory=dict, compare=False)

    @property
    def num_nodes(self) -> int:
        return sum(len(r.nodes) for r in self.ranks)

    @property
    def unsized_fraction(self) -> float:
        return self.unsized_collectives / self.collectives if self.collectives else 0.0

    def nodes(self) -> list[Node]:
        return [node for rank in self.ranks for node in rank.nodes]

    def scaled(self, compute_factor: float = 1.0, comm_bytes_factor: float = 1.0) -> "ExecutionGraph":
        """Copy with CompNode durations and collective message sizes scaled."""
        ranks = []
        for rank in self.ranks:
            nodes = []
            for node in rank.nodes:
                if node.kind == NodeKind.COMP:
                    node = replace(node, dur_ns=round(node.dur_ns * compute_factor))
                elif node.comm is not None:
                    node = replace(node, comm=replace(node.comm, bytes=round(node.comm.bytes * comm_bytes_factor)))
                nodes.append(node)
            ranks.append(replace(rank, nodes=tuple(nodes)))
        return replace(self, ranks=tuple(ranks))

    def to_dict(self) -> dict:
        return {
            "collectives": self.collectives,
            "unsized_collectives": self.unsized_collectives,
            "groups": {str(gid): list(members) for gid, members in sorted(self.groups.items())},
            "ranks": [
                {
                    "rank": r.rank,
                    "step_ns": r.step_ns,
                    "nodes": [n.to_dict() for n in r.nodes],
                    "edges": [list(e) for e in r.edges],
                }
                for r in self.ranks
            ],
        }


def check_collective_order(graph: ExecutionGraph) -> None:
    """
    Reject graphs whose ranks meet shared collectives in incompatible orders.

    Every group instance is collapsed into one vertex and the lane edges are kept;
    the graph replays without a deadlock exactly when that quotient is acyclic.

    Raises:
        CollectiveMatchFailure: Lane order and group synchronization form a cycle
    """
    vertex = {
        node.id: ("group", node.comm.group) if node.comm is not None else ("node", node.id)
        for node in graph.nodes()
    }
    successors: dict[tuple, set[tuple]] = defaultdict(set)
    indegree = dict.fromkeys(vertex.values(), 0)
    for rank in graph.ranks:
        for src, dst in rank.edges:
            a, b = vertex[src], vertex[dst]
            if b not in successors[a]:
                successors[a].add(b)
                indegree[b] += 1
    ready = [v for v, degree in indegree.items() if degree == 0]
    ordered = 0
    while ready:
        v = ready.pop()
        ordered += 1
        for w in successors[v]:
            indegree[w] -= 1
            if indegree[w] == 0:
                ready.append(w)
    if ordered < len(indegree):
        stuck = sorted(ident for kind, ident in indegree if kind == "group" and indegree[(kind, ident)] > 0)
        raise CollectiveMatchFailure(
            f"collective order disagrees across ranks; groups {stuck[:5]} wait on each other"
        )


class GraphBuilder:
    """
    Incremental graph construction, one lane (rank, stream) at a time.

    Appending a node to a lane adds the edge from the lane's previous node.
    """

    def __init__(self):
        self._next_id = 0
        self._nodes: dict[int, list[Node]] = defaultdict(list)
        self._edges: dict[int, list[tuple[int, int]]] = defaultdict(list)
        self._last: dict[tuple[int, str], int] = {}
        self._step_ns: dict[int, int] = {}
        self.collectives = 0
        self.unsized = 0

    def rank(self, rank: int, step_ns: int) -> None:
        self._step_ns[rank] = step_ns
        self._nodes.setdefault(rank, [])

    def _append(self, rank: int, stream: str, kind: NodeKind, dur_ns: int, name: str, comm=None) -> int:
        if dur_ns < 0:
            raise ValueError(f"node duration must be >= 0, got {dur_ns}")
        node = Node(self._next_id, rank, kind, int(dur_ns), stream, name, comm)
        self._next_id += 1
        self._nodes[rank].append(node)
        previous = self._last.get((rank, stream))
        if previous is not None:
            self._edges[rank].append((previous, node.id))
        self._last[(rank, stream)] = node.id
        return node.id

    def comp(self, rank: int, stream: str, dur_ns: int, name: str = "") -> int:
        return self._append(rank, stream, NodeKind.COMP, dur_ns, name)

    def gap(self, rank: int, stream: str, dur_ns: int) -> int:
        return self._append(rank, stream, NodeKind.GAP, dur_ns, "")

    def collective(
        self,
        rank: int,
        stream: str,
        kind: CollectiveKind | str,
        size: int,
        group: int,
        group_size: int,
        dur_ns: int,
        name: str = "",
    ) -> int:
        self.collectives += 1
        comm = CommAttrs(CollectiveKind(kind), int(size), int(group), int(group_size))
        return self._append(rank, stream, NodeKind.COMM_COLL, dur_ns, name, comm)

    def build(self, notes: dict | None = None) -> ExecutionGraph:
        members: dict[int, set[int]] = defaultdict(set)
        for rank, nodes in self._nodes.items():
            for node in nodes:
                if node.comm is not None:
                    members[node.comm.group].add(rank)
        groups = {gid: tuple(sorted(ranks)) for gid, ranks in sorted(members.items())}
        ranks = []
        for rank in sorted(self._nodes):
            if not self._nodes[rank]:
                raise ValueError(f"rank {rank} has no nodes")
            nodes = tuple(
                replace(n, comm=replace(n.comm, members=groups[n.comm.group])) if n.comm is not None else n
                for n in self._nodes[rank]
            )
            step_ns = self._step_ns.get(rank, 0)
            ranks.append(RankGraph(rank, step_ns, nodes, tuple(self._edges[rank])))
        if not ranks:
            raise ValueError("execution graph has no ranks")
        graph = ExecutionGraph(
            tuple(ranks),
            groups,
            collectives=self.collectives,
            unsized_collectives=self.unsized,
            notes=notes or {},
        )
        check_collective_order(graph)
        return graph


def _lanes(timeline: RankTimeline, t_start: int, t_end: int) -> dict[str, list[tuple[int, int, object]]]:
    """Clipped kernel events of a window, split into non-overlapping lanes per stream."""
    by_stream: dict[str, list[list[tuple[int, int, object]]]] = defaultdict(list)
    for event in timeline.events:
        if event.klass not in KERNEL_CLASSES:
            continue
        start, end = max(event.t_start, t_start), min(event.t_end, t_end)
        if start >= end:
            continue
        sublanes = by_stream[event.stream]
        for lane in sublanes:
            if lane[-1][1] <= start:
                lane.append((start, end, event))
                break
        else:
            sublanes.append([(start, end, event)])
    lanes = {}
    for stream, sublanes in by_stream.items():
        for k, lane in enumerate(sublanes):
            lanes[stream if k == 0 else f"{stream}#{k}"] = lane
    return dict(sorted(lanes.items()))


def _select_window(card: WorkloadCard, timeline: RankTimeline, step: int):
    kind = StepKind.DECODE_STEP if card.is_inference else StepKind.TRAIN_STEP
    windows = timeline.steps_of(kind)
    if not windows:
        raise NoStepWindows(f"rank {timeline.rank} has no {kind} windows")
    candidates = windows[1:-1] if len(windows) >= 3 else windows
    if step >= len(candidates):
        raise NoStepWindows(f"rank {timeline.rank} has no step {step} to convert ({len(candidates)} available)")
    return candidates[step]


def build_graph(
    trace: NormalizedTrace,
    card: WorkloadCard,
    step: int = 0,
    match_tolerance: float = DEFAULT_MATCH_TOLERANCE,
) -> ExecutionGraph:
    """
    Convert one step of every rank into an execution graph.

    Args:
        trace: Normalized trace
        card: Workload card (phase decides which windows are steady-state)
        step: Index into the inner steps (all steps when a rank has fewer than three)
        match_tolerance: Largest tolerated share of collective instances missing on
            some expected member rank

    Raises:
        NoStepWindows: A rank has no window to convert
        CollectiveMatchFailure: Collective instances disagree across ranks
    """
    trace = trace.relabel_steps(card.phase, first_is_prefill=card.first_step_is_prefill)
    if not trace.ranks:
        raise NoStepWindows("trace has no ranks")

    windows = {timeline.rank: _select_window(card, timeline, step) for timeline in trace.ranks}
    lanes = {timeline.rank: _lanes(timeline, windows[timeline.rank].t_start, windows[timeline.rank].t_end)
             for timeline in trace.ranks}

    # occurrence matching of sized collectives
    occurrences: dict[tuple, dict[int, list[int]]] = defaultdict(lambda: defaultdict(list))
    for rank, rank_lanes in lanes.items():
        sized = []
        for lane in rank_lanes.values():
            for start, end, event in lane:
                if event.klass == EventClass.COLLECTIVE and event.message_bytes is not None:
                    sized.append((start, id(event), event))
        for start, _, event in sorted(sized, key=lambda item: item[0]):
            key = (str(event.collective_kind), event.group_size, event.group_ranks)
            occurrences[key][rank].append(id(event))

    group_of: dict[int, int] = {}
    members_of: dict[int, int] = {}
    instances: list[tuple[tuple, int, list[int]]] = []
    for key, per_rank in occurrences.items():
        longest = max(len(ids) for ids in per_rank.values())
        for i in range(longest):
            holders = [rank for rank in sorted(per_rank) if i < len(per_rank[rank])]
            instances.append((key, i, holders))
    partial = [inst for inst in instances if len(inst[2]) < len(occurrences[inst[0]])]
    if instances and partial:
        share = len(partial) / len(instances)
        logger.warning("%d of %d collective instances are missing on some rank", len(partial), len(instances))
        if share > match_tolerance:
            raise CollectiveMatchFailure(
                f"{len(partial)} of {len(instances)} collective instances do not match across ranks"
            )

    # group ids in order of the first member's appearance
    ordered = sorted(instances, key=lambda inst: (inst[2][0], inst[1], inst[0][0]))
    for gid, (key, i, holders) in enumerate(ordered):
        for rank in holders:
            group_of[occurrences[key][rank][i]] = gid
            members_of[occurrences[key][rank][i]] = len(holders)

    builder = GraphBuilder()
    inferred = 0
    for rank in sorted(lanes):
        window = windows[rank]
        builder.rank(rank, window.duration)
        if not lanes[rank]:
            builder.gap(rank, IDLE_LANE, window.duration)
            continue
        for stream, lane in lanes[rank].items():
            cursor = window.t_start
            for start, end, event in lane:
                if start > cursor:
                    builder.gap(rank, stream, start - cursor)
                if id(event) in group_of:
                    if event.group_size is None:
                        inferred += 1
                    builder.collective(
                        rank,
                        stream,
                        event.collective_kind,
                        event.message_bytes,
                        group_of[id(event)],
                        event.group_size or members_of[id(event)],
                        end - start,
                        event.name,
                    )
                else:
                    if event.klass == EventClass.COLLECTIVE:
                        builder.collectives += 1
                        builder.unsized += 1
                    builder.comp(rank, stream, end - start, event.name)
                cursor = end
            if window.t_end > cursor:
                builder.gap(rank, stream, window.t_end - cursor)

    if builder.unsized:
        logger.warning("%d collective(s) carry no message size and replay at measured duration", builder.unsized)
    if inferred:
        logger.info("%d collective(s) carry no group size; using the matched member count", inferred)
    graph = builder.build(notes={"partial_groups": len(partial), "step": step})
    logger.info("Built execution graph: %d ranks, %d nodes, %d groups", len(graph.ranks), graph.num_nodes,
                len(graph.groups))
    return graph


def export_graph(graph: ExecutionGraph) -> str:
    """Deterministic JSON document (sorted keys, trailing newline)."""
    return json.dumps(graph.to_dict(), indent=2, sort_keys=True) + "\n"


def import_graph(document: str | bytes | dict) -> ExecutionGraph:
    """Rebuild a graph from ``export_graph`` output."""
    data = json.loads(document) if isinstance(document, (str, bytes)) else document
    groups = {int(gid): tuple(members) for gid, members in data["groups"].items()}
    ranks = []
    for entry in data["ranks"]:
        nodes = []
        for raw in entry["nodes"]:
            comm = None
            if "comm" in raw:
                c = raw["comm"]
                comm = CommAttrs(
                    CollectiveKind(c["kind"]), c["bytes"], c["group"], c["group_size"], groups[c["group"]]
                )
            nodes.append(
                Node(raw["id"], entry["rank"], NodeKind(raw["kind"]), raw["dur_ns"], raw["stream"], raw["name"], comm)
            )
        if not nodes:
            raise ValueError(f"rank {entry['rank']} has no nodes")
        ranks.append(RankGraph(entry["rank"], entry["step_ns"], tuple(nodes), tuple(tuple(e) for e in entry["edges"])))
    graph = ExecutionGraph(
        tuple(ranks), groups, collectives=data["collectives"], unsized_collectives=data["unsized_collectives"]
    )
    check_collective_order(graph)
    return graph


def load_graph(path: str | Path) -> ExecutionGraph:
    with open(path) as f:
        return import_graph(f.read())
