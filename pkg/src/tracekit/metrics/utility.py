"""
Network utility tool: step-time gain from doubling scale-up bandwidth, replayed on
the execution graph of the first inner step.
"""

from tracekit.card.schema import WorkloadCard
from tracekit.errors import CollectiveMatchFailure, NotApplicable
from tracekit.metrics.base import Direction, Measurement, MetricContext
from tracekit.metrics.registry import register_metric
from tracekit.sim.graph import build_graph
from tracekit.sim.network import NetworkConfig, Resource
from tracekit.sim.utility import utility
from tracekit.trace.model import NormalizedTrace


@register_metric("scale_up_bw_utility", unit="%", direction=Direction.HIGHER_BETTER)
def scale_up_bw_utility(card: WorkloadCard, trace: NormalizedTrace, ctx: MetricContext) -> Measurement:
    if ctx.net is not None:
        net = ctx.net
    else:
        try:
            net = NetworkConfig.from_card(card)
        except ValueError as e:
            raise NotApplicable(str(e)) from e
    try:
        graph = build_graph(trace, card, step=ctx.options.graph_step)
    except CollectiveMatchFailure as e:
        raise NotApplicable(str(e)) from e
    if graph.unsized_fraction > ctx.options.max_unsized_fraction:
        raise NotApplicable(
            f"{graph.unsized_collectives} of {graph.collectives} collectives carry no message size"
        )
    result = utility(graph, net, Resource.SCALE_UP_BANDWIDTH)
    return Measurement(
        result.utility,
        notes={
            "baseline_step_time": result.baseline_step_time,
            "simulated_step_time": result.simulated_step_time,
            "network": net.to_dict(),
        },
    )
