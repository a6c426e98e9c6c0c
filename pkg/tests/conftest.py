"""
Shared fixtures: synthetic traces in both dialects and workload cards.

Workloads are described once as a list of ``Span`` objects with microsecond
timestamps and rendered into Kineto JSON (``ts``/``dur`` in µs) or XLA JSON
(device picoseconds), so the same evidence can be fed through either parser.
"""

import copy
import gzip
import json
from dataclasses import dataclass
from pathlib import Path

import pytest
import yaml

from tracekit.card.schema import parse_card

STEP_US = 10_000
ALLREDUCE_BYTES = 1 << 27
COPY_BYTES = 100_000_000

NCCL_NAMES = {
    "AllReduce": "ncclDevKernel_AllReduce_Sum_bf16_RING_LL",
    "AllGather": "ncclDevKernel_AllGather_RING_LL",
    "ReduceScatter": "ncclDevKernel_ReduceScatter_Sum_bf16_RING_LL",
    "AllToAll": "ncclDevKernel_AllToAll_RING_LL",
}
HLO_CATEGORIES = {
    "AllReduce": "all-reduce",
    "AllGather": "all-gather",
    "ReduceScatter": "reduce-scatter",
    "AllToAll": "all-to-all",
}


@dataclass(frozen=True)
class Span:
    """One device event; ``kind`` is ``compute``, ``copy`` or a collective kind."""

    kind: str
    start: int
    dur: int
    bytes: int | None = None
    group_size: int | None = None
    name: str | None = None
    occupancy: float | None = None
    tid: int = 7


@dataclass(frozen=True)
class Workload:
    steps: list[tuple[int, int]]
    spans: list[Span]


def standard_workload(base: int = 1_000, n_steps: int = 6, group_size: int = 2) -> Workload:
    """
    Training steps of 10 ms, each with the same layout (offsets in µs):

        compute    [0, 6000)
        AllReduce  [5000, 8000)   overlaps compute for 1000
        copy       [8000, 8500)
        compute    [8500, 9500)
    """
    steps, spans = [], []
    for i in range(n_steps):
        o = base + i * STEP_US
        steps.append((o, STEP_US))
        spans += [
            Span("compute", o, 6_000, name="sm80_xmma_gemm_bf16"),
            Span("AllReduce", o + 5_000, 3_000, bytes=ALLREDUCE_BYTES, group_size=group_size),
            Span("copy", o + 8_000, 500, bytes=COPY_BYTES),
            Span("compute", o + 8_500, 1_000, name="vectorized_elementwise_kernel"),
        ]
    return Workload(steps, spans)


def inference_workload(base: int = 0, decode_steps: int = 128, prefill_us: int = 20_000, decode_us: int = 1_000):
    steps = [(base, prefill_us)]
    spans = [Span("compute", base, prefill_us // 2, name="flash_fwd_kernel")]
    t = base + prefill_us
    for _ in range(decode_steps):
        steps.append((t, decode_us))
        spans.append(Span("compute", t, decode_us // 2, name="gemv_kernel"))
        t += decode_us
    return Workload(steps, spans)


def kineto_events(workload: Workload, pid: int = 0, step_offset: int = 0) -> list[dict]:
    events = []
    for i, (start, dur) in enumerate(workload.steps):
        events.append(
            {
                "ph": "X",
                "name": f"ProfilerStep#{i + step_offset}",
                "cat": "gpu_user_annotation",
                "pid": pid,
                "tid": 7,
                "ts": start,
                "dur": dur,
            }
        )
    for span in workload.spans:
        event = {"ph": "X", "pid": pid, "tid": span.tid, "ts": span.start, "dur": span.dur, "args": {}}
        if span.kind == "compute":
            event.update(name=span.name or "sm80_xmma_gemm_bf16", cat="kernel")
            if span.occupancy is not None:
                event["args"]["est. achieved occupancy %"] = span.occupancy
        elif span.kind == "copy":
            event.update(name=span.name or "Memcpy DtoD (Device -> Device)", cat="gpu_memcpy")
            if span.bytes is not None:
                event["args"]["bytes"] = span.bytes
        else:
            event.update(name=span.name or NCCL_NAMES[span.kind], cat="kernel")
            if span.bytes is not None:
                event["args"]["bytes"] = span.bytes
            if span.group_size is not None:
                event["args"]["Group size"] = span.group_size
        events.append(event)
    return events


def _device(start_us: int, dur_us: int) -> dict:
    return {"device_offset_ps": start_us * 1_000_000, "device_duration_ps": dur_us * 1_000_000}


def xla_events(workload: Workload, pid: int = 1) -> list[dict]:
    events = []
    for i, (start, dur) in enumerate(workload.steps):
        args = {"step_num": i, **_device(start, dur)}
        events.append({"ph": "X", "name": "$core.py:331 step", "pid": pid, "tid": 7, "args": args})
    for i, span in enumerate(workload.spans):
        base = {"ph": "X", "pid": pid, "tid": span.tid}
        if span.kind == "compute":
            args = {"hlo_category": "fusion", **_device(span.start, span.dur)}
            events.append({**base, "name": f"fusion.{i}", "args": args})
        elif span.kind == "copy":
            start_args = {"hlo_category": "copy", **_device(span.start, 0)}
            if span.bytes is not None:
                start_args["bytes"] = span.bytes
            events.append({**base, "name": f"copy-start.{i}", "args": start_args})
            done_args = {"hlo_category": "copy", **_device(span.start + span.dur, 0)}
            events.append({**base, "name": f"copy-done.{i}", "args": done_args})
        else:
            args = {"hlo_category": HLO_CATEGORIES[span.kind], **_device(span.start, span.dur)}
            if span.bytes is not None:
                args["bytes"] = span.bytes
            if span.group_size is not None:
                args["group_size"] = span.group_size
            events.append({**base, "name": f"{HLO_CATEGORIES[span.kind]}.{i}", "args": args})
    return events


def write_trace(path: Path, events: list[dict]) -> Path:
    document = json.dumps({"traceEvents": events}).encode()
    if path.suffix == ".gz":
        path.write_bytes(gzip.compress(document))
    else:
        path.write_bytes(document)
    return path


BASE_CARD = {
    "version": "1.0",
    "description": "synthetic fixture",
    "workload": {
        "model": {
            "phase": "training",
            "moe": False,
            "granularity": "model_fwd_bwd_pass",
            "model_family": "llama-3-8b",
            "precision": "bf16",
            "model_arch": {
                "num_params": 8000000000,
                "num_params_embedding": 500000000,
                "num_layers": 32,
                "num_heads": 32,
                "head_dim": 128,
            },
        },
        "data": {"batch_size": 4, "seq_len": 512},
        "hardware": {
            "network_topo": {"topology": "fat-tree", "bandwidth_gbps": [400, 2400]},
            "xpu_spec": {"type": "GPU", "model": "nvidia_a100", "total_count": 2, "count_per_node": 2},
            "driver_version": "550.54.15",
        },
    },
    "Model-executor": {
        "framework": {"name": "torchtitan", "version": "0.1.0"},
        "model_plan_parallelization": {"dp_shard": 2, "tp": 1, "pp": 1},
        "communication_library": {"name": "NCCL", "version": "2.21.5", "env": {"NCCL_IB_QPS_PER_CONNECTION": 4}},
    },
    "metric_source": {"traces": ["kineto"]},
}


def _merge(base: dict, overrides: dict) -> dict:
    out = copy.deepcopy(base)
    for key, value in overrides.items():
        if isinstance(value, dict) and isinstance(out.get(key), dict):
            out[key] = _merge(out[key], value)
        else:
            out[key] = value
    return out


def card_data(**overrides) -> dict:
    return _merge(BASE_CARD, overrides)


INFERENCE_OVERRIDES = {
    "workload": {"model": {"phase": "inference"}, "data": {"input_len": 512, "output_len": 128}},
}


@pytest.fixture
def make_card():
    """Factory: ``make_card(phase="training", **section_overrides) -> WorkloadCard``."""

    def factory(phase: str = "training", **overrides):
        data = card_data(**overrides)
        data["workload"]["model"]["phase"] = phase
        return parse_card(yaml.safe_dump(data, sort_keys=False), source=f"{phase}.yaml")

    return factory


@pytest.fixture
def card_file(tmp_path):
    """Factory writing a card YAML and returning its path."""

    def factory(phase: str = "training", name: str = "card.yaml", **overrides):
        data = card_data(**overrides)
        data["workload"]["model"]["phase"] = phase
        path = tmp_path / name
        path.write_text(yaml.safe_dump(data, sort_keys=False))
        return path

    return factory


@pytest.fixture
def trace_files(tmp_path):
    """
    Factory writing one trace file per workload.

    ``trace_files([w0, w1], dialect="kineto")`` returns the paths in rank order.
    """

    def factory(workloads: list[Workload], dialect: str = "kineto", prefix: str = "rank", gz: bool = False):
        out = []
        suffix = ".json.gz" if gz else ".json"
        for rank, workload in enumerate(workloads):
            events = kineto_events(workload) if dialect == "kineto" else xla_events(workload)
            out.append(write_trace(tmp_path / f"{prefix}{rank}{suffix}", events))
        return out

    return factory


@pytest.fixture
def raw_trace(tmp_path):
    """Factory writing raw Chrome-trace events to a file."""

    def factory(events: list[dict], name: str = "trace.json"):
        return write_trace(tmp_path / name, events)

    return factory


@pytest.fixture
def workloads():
    """Module-level workload builders, exposed to test modules."""

    class Builders:
        Span = Span
        Workload = Workload
        standard = staticmethod(standard_workload)
        inference = staticmethod(inference_workload)
        kineto_events = staticmethod(kineto_events)
        xla_events = staticmethod(xla_events)
        STEP_US = STEP_US
        ALLREDUCE_BYTES = ALLREDUCE_BYTES
        COPY_BYTES = COPY_BYTES

    return Builders


@pytest.fixture
def fixtures_dir() -> Path:
    return Path(__file__).parent / "fixtures"


@pytest.fixture
def card_dict():
    """Factory returning the raw card mapping, before parsing."""
    return card_data
