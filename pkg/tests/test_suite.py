import json

import pytest

from tracekit.errors import EmptyRegistry
from tracekit.metrics import METRIC_REGISTRY, MetricTool, PerformanceProfile, run_suite
from tracekit.metrics.base import Direction, Measurement, MetricContext
from tracekit.trace import load_trace

CATALOG = [
    "avg_step_time",
    "ttft",
    "tpot",
    "decode_throughput",
    "mfu",
    "mean_sm_coverage",
    "compute_bound_fraction",
    "memory_bound_fraction",
    "dominant_kernel_concentration",
    "moe_fraction",
    "load_imbalance_ratio",
    "memory_transfer_overhead",
    "average_memory_bandwidth",
    "communication_fraction",
    "compute_comm_overlap",
    "total_communication_time",
    "straggler",
    "bw_allgather",
    "bw_allreduce",
    "bw_reducescatter",
    "bw_alltoall",
    "traffic_volume",
    "scale_up_bw_utility",
]


@pytest.fixture
def evidence(make_card, trace_files, workloads):
    trace = load_trace(trace_files([workloads.standard(), workloads.standard(base=3_000_000)]))
    return make_card(), trace


def test_registry_holds_the_catalog_in_order():
    assert list(METRIC_REGISTRY) == CATALOG


def test_every_tool_is_either_computed_or_skipped(evidence):
    card, trace = evidence
    profile = run_suite(card, trace)
    keys = {e.key for e in profile.entries} | {s.key for s in profile.skipped}
    assert set(CATALOG) - {"traffic_volume"} <= keys
    assert not {e.key for e in profile.entries} & {s.key for s in profile.skipped}


def test_training_profile(evidence):
    card, trace = evidence
    profile = run_suite(card, trace)
    values = profile.values()
    skipped = {s.key: s.reason for s in profile.skipped}

    assert values["avg_step_time"] == pytest.approx(0.01)
    assert values["straggler"] == 0.0
    assert values["traffic_volume_allreduce"] == pytest.approx(1 << 27)
    assert skipped["ttft"] == "not applicable to training workloads"
    assert skipped["moe_fraction"] == "not applicable: workload card sets moe=false"
    assert skipped["mean_sm_coverage"].startswith("NotApplicable")
    assert skipped["bw_allgather"].startswith("NoSizedCollectives")
    assert profile.workload_card_ref == card.ref
    assert profile.dialect == "KinetoGpu"
    assert profile.trace_kinds == ("kineto",)


def test_profile_is_deterministic(evidence):
    card, trace = evidence
    assert run_suite(card, trace).to_json() == run_suite(card, trace).to_json()


def test_profile_round_trips_through_json(evidence):
    card, trace = evidence
    profile = run_suite(card, trace)
    again = PerformanceProfile.from_dict(json.loads(profile.to_json()))
    assert again.to_json() == profile.to_json()
    assert again.get("avg_step_time").direction == Direction.LOWER_BETTER


def test_clock_offsets_do_not_change_values(evidence):
    card, trace = evidence
    shifted = trace.with_rank(1, trace.ranks[1].shifted(123_456_789))
    assert run_suite(card, shifted).values() == run_suite(card, trace).values()


def test_only_restricts_the_run(evidence):
    card, trace = evidence
    profile = run_suite(card, trace, only=["mfu", "avg_step_time"])
    assert [e.key for e in profile.entries] == ["avg_step_time", "mfu"]
    assert profile.skipped == ()


def test_only_rejects_unknown_keys(evidence):
    card, trace = evidence
    with pytest.raises(ValueError):
        run_suite(card, trace, only=["nope"])


def test_empty_registry(evidence):
    card, trace = evidence
    with pytest.raises(EmptyRegistry):
        run_suite(card, trace, registry={})


def test_failing_tool_is_skipped_not_raised(evidence):
    card, trace = evidence

    def broken(card, trace, ctx):
        return 1 / 0

    def constant(card, trace, ctx):
        return Measurement(2.5)

    registry = {
        "broken": MetricTool("broken", broken, "s", Direction.LOWER_BETTER),
        "constant": MetricTool("constant", constant, "s", Direction.LOWER_BETTER),
    }
    profile = run_suite(card, trace, registry=registry, ctx=MetricContext())
    assert profile.values() == {"constant": 2.5}
    assert profile.skipped[0].key == "broken"
    assert profile.skipped[0].reason.startswith("ZeroDivisionError")


def test_missing_peak_spec_is_skipped(make_card, evidence):
    _, trace = evidence
    card = make_card(workload={"hardware": {"xpu_spec": {"model": "mystery-accelerator"}}})
    skipped = {s.key: s.reason for s in run_suite(card, trace, only=["mfu"]).skipped}
    assert skipped["mfu"].startswith("MissingPeakSpec")


def test_duplicate_profile_keys_rejected():
    from tracekit.metrics import MetricResult

    entry = MetricResult("avg_step_time", 1.0, "s", Direction.LOWER_BETTER)
    with pytest.raises(ValueError):
        PerformanceProfile((entry, entry))


def test_inference_profile(make_card, trace_files, workloads):
    trace = load_trace(trace_files([workloads.inference()]))
    profile = run_suite(make_card("inference"), trace)
    values = profile.values()
    assert values["ttft"] == pytest.approx(0.02)
    assert values["tpot"] == pytest.approx(0.001)
    skipped = {s.key: s.reason for s in profile.skipped}
    assert skipped["straggler"].startswith("not applicable: needs at least 2 ranks")
