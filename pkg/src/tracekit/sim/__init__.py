from tracekit.sim.graph import (
    CommAttrs,
    ExecutionGraph,
    GraphBuilder,
    Node,
    NodeKind,
    RankGraph,
    build_graph,
    check_collective_order,
    export_graph,
    import_graph,
    load_graph,
)
from tracekit.sim.network import NetworkConfig, Resource
from tracekit.sim.replay import ReplayMode, ReplayResult, comm_time_model, replay
from tracekit.sim.utility import WhatIfResult, utility, whatif

__all__ = [
    "CommAttrs",
    "ExecutionGraph",
    "GraphBuilder",
    "Node",
    "NodeKind",
    "RankGraph",
    "build_graph",
    "check_collective_order",
    "export_graph",
    "import_graph",
    "load_graph",
    "NetworkConfig",
    "Resource",
    "ReplayMode",
    "ReplayResult",
    "comm_time_model",
    "replay",
    "WhatIfResult",
    "utility",
    "whatif",
]
