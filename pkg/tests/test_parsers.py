import io
import json

import pytest

from tracekit.errors import EmptyTrace, ParseError
from tracekit.trace import CollectiveKind, EventClass, parse_kineto, parse_xla


def _doc(events: list[dict]) -> io.BytesIO:
    return io.BytesIO(json.dumps({"traceEvents": events}).encode())


def _kernel(name="sm80_xmma_gemm_bf16", ts=0, dur=10, cat="kernel", **args) -> dict:
    return {"ph": "X", "name": name, "cat": cat, "pid": 0, "tid": 7, "ts": ts, "dur": dur, "args": args}


def _device(name, offset_ps, duration_ps, category=None, **args) -> dict:
    args = {"device_offset_ps": offset_ps, "device_duration_ps": duration_ps, **args}
    if category is not None:
        args["hlo_category"] = category
    return {"ph": "X", "name": name, "pid": 1, "tid": 3, "args": args}


def test_kineto_step_window_in_nanoseconds():
    events = [
        {"ph": "X", "name": "ProfilerStep#5", "cat": "user_annotation", "pid": 0, "tid": 1, "ts": 1000, "dur": 500000},
        _kernel(ts=2000, dur=10),
    ]
    timeline = parse_kineto(_doc(events))
    assert len(timeline.steps) == 1
    window = timeline.steps[0]
    assert (window.index, window.t_start, window.t_end, window.raw_index) == (0, 1_000_000, 501_000_000, 5)


def test_kineto_classifies_device_events():
    events = [
        _kernel("ncclAllReduce_Sum_f32_RING_LL", ts=0, dur=10),
        _kernel("Memcpy HtoD (Pageable -> Device)", cat="gpu_memcpy", ts=20, dur=7),
        _kernel("Memset (Device)", cat="gpu_memset", ts=30, dur=1),
        _kernel("sm80_xmma_gemm_bf16", ts=40, dur=5),
        _kernel("cudaLaunchKernel", cat="cuda_runtime", ts=40, dur=2),
        _kernel("cudaMemcpyAsync", cat="cuda_runtime", ts=41, dur=2),
    ]
    timeline = parse_kineto(_doc(events))
    by_name = {e.name: e for e in timeline.events}

    allreduce = by_name["ncclAllReduce_Sum_f32_RING_LL"]
    assert allreduce.klass == EventClass.COLLECTIVE
    assert allreduce.collective_kind == CollectiveKind.ALL_REDUCE
    assert allreduce.duration == 10_000

    memcpy = by_name["Memcpy HtoD (Pageable -> Device)"]
    assert memcpy.klass == EventClass.MEM_TRANSFER
    assert memcpy.duration == 7_000
    assert by_name["Memset (Device)"].klass == EventClass.MEM_TRANSFER

    assert by_name["sm80_xmma_gemm_bf16"].klass == EventClass.COMPUTE
    assert by_name["cudaLaunchKernel"].klass == EventClass.OTHER
    assert by_name["cudaMemcpyAsync"].klass == EventClass.OTHER


def test_kineto_collective_kinds():
    names = {
        "ncclDevKernel_AllGather_RING_LL": CollectiveKind.ALL_GATHER,
        "ncclDevKernel_ReduceScatter_Sum_bf16_RING_LL": CollectiveKind.REDUCE_SCATTER,
        "ncclDevKernel_SendRecv": CollectiveKind.SEND_RECV,
        "ncclDevKernel_Broadcast_RING_LL": CollectiveKind.BROADCAST,
        "ncclDevKernel_AllToAll": CollectiveKind.ALL_TO_ALL,
    }
    timeline = parse_kineto(_doc([_kernel(name, ts=i * 100) for i, name in enumerate(names)]))
    assert {e.name: e.collective_kind for e in timeline.events} == names


def test_kineto_collective_sized_from_element_counts():
    event = _kernel(
        "ncclDevKernel_AllGather_RING_LL",
        **{"In msg nelems": 1024, "Out msg nelems": 2048, "dtype": "BFloat16", "Process Group Ranks": "[0, 1, 2, 3]"},
    )
    (gather,) = parse_kineto(_doc([event])).events
    assert gather.message_bytes == 4096
    assert gather.group_size == 4
    assert gather.group_ranks == (0, 1, 2, 3)


def test_kineto_explicit_bytes_win():
    event = _kernel("ncclDevKernel_AllReduce_Sum_bf16", bytes=1000, **{"In msg nelems": 5, "Group size": 8})
    (allreduce,) = parse_kineto(_doc([event])).events
    assert allreduce.message_bytes == 1000
    assert allreduce.group_size == 8


def test_kineto_prefers_gpu_step_annotation():
    events = [
        {"ph": "X", "name": "ProfilerStep#1", "cat": "user_annotation", "pid": 0, "tid": 1, "ts": 0, "dur": 100},
        {"ph": "X", "name": "ProfilerStep#1", "cat": "gpu_user_annotation", "pid": 0, "tid": 7, "ts": 10, "dur": 80},
        _kernel(ts=20, dur=10),
    ]
    (window,) = parse_kineto(_doc(events)).steps
    assert (window.t_start, window.t_end) == (10_000, 90_000)


def test_kineto_fractional_timestamps_are_exact():
    (event,) = parse_kineto(_doc([_kernel(ts=1234.567, dur=0.5)])).events
    assert (event.t_start, event.duration) == (1_234_567, 500)


def test_kineto_tallies_malformed_events():
    events = [
        {"ph": "X", "name": "sm80_gemm", "cat": "kernel", "pid": 0, "tid": 7, "dur": 5},
        {"ph": "X", "name": "sm80_gemm", "cat": "kernel", "pid": 0, "tid": 7, "ts": 10},
        {"ph": "i", "name": "instant", "pid": 0, "tid": 7, "ts": 10},
        _kernel(ts=20, dur=10),
    ]
    timeline = parse_kineto(_doc(events))
    assert timeline.warnings == {"missing_ts": 1, "missing_dur": 1}
    assert len(timeline.kernel_events()) == 2


def test_kineto_events_sorted_by_start():
    timeline = parse_kineto(_doc([_kernel(ts=50), _kernel(ts=10), _kernel(ts=30)]))
    assert [e.t_start for e in timeline.events] == [10_000, 30_000, 50_000]


def test_kineto_without_kernels_is_empty():
    events = [{"ph": "X", "name": "aten::mm", "cat": "cpu_op", "pid": 0, "tid": 1, "ts": 0, "dur": 5}]
    with pytest.raises(EmptyTrace):
        parse_kineto(_doc(events))


def test_malformed_json_reports_offset():
    stream = io.BytesIO(b'{"traceEvents": [{"ph": "X", "name": "a", "ts": }]}')
    with pytest.raises(ParseError) as excinfo:
        parse_kineto(stream, source="broken.json")
    assert excinfo.value.offset is not None
    assert excinfo.value.source == "broken.json"


def test_xla_copy_pair_becomes_one_transfer():
    events = [
        _device("copy-start.3", 2_000_000, 10_000, bytes=4096),
        _device("copy-done.3", 5_000_000, 10_000),
    ]
    (copy,) = parse_xla(_doc(events)).events
    assert copy.klass == EventClass.MEM_TRANSFER
    assert (copy.t_start, copy.t_end) == (2000, 5000)
    assert copy.message_bytes == 4096


def test_xla_unmatched_copy_is_tallied():
    events = [_device("copy-done.9", 5_000_000, 0), _device("fusion.1", 0, 1_000_000, "fusion")]
    timeline = parse_xla(_doc(events))
    assert timeline.warnings == {"unmatched_copy": 1}
    assert [e.name for e in timeline.events] == ["fusion.1"]


def test_xla_classification_by_category():
    events = [
        _device("all-reduce.1", 0, 4_000_000, "all-reduce", bytes=1 << 20, replica_groups="{{0,1,2,3},{4,5,6,7}}"),
        _device("all-gather-start.2", 0, 1_000_000, "all-gather-start"),
        _device("broadcast.3", 0, 1_000_000, "broadcast"),
        _device("convolution.4", 0, 1_000_000, "convolution"),
        _device("jit_train_step", 0, 9_000_000, "fusion"),
        _device("dependency-wait", 0, 1_000_000, "fusion"),
        _device("custom-call.5", 0, 1_000_000, "custom-call", model_flops=2.0e9),
    ]
    by_name = {e.name: e for e in parse_xla(_doc(events)).events}

    allreduce = by_name["all-reduce.1"]
    assert allreduce.klass == EventClass.COLLECTIVE
    assert allreduce.collective_kind == CollectiveKind.ALL_REDUCE
    assert allreduce.duration == 4000
    assert allreduce.message_bytes == 1 << 20
    assert allreduce.group_size == 4

    assert by_name["all-gather-start.2"].collective_kind == CollectiveKind.ALL_GATHER
    assert by_name["broadcast.3"].klass == EventClass.OTHER
    assert by_name["convolution.4"].klass == EventClass.COMPUTE
    assert by_name["jit_train_step"].klass == EventClass.OTHER
    assert by_name["dependency-wait"].klass == EventClass.OTHER
    assert by_name["custom-call.5"].model_flops == 2.0e9


def test_xla_step_marker_windows():
    events = [
        _device("$core.py:331 step", 0, 10_000_000, step_num=7),
        _device("$core.py:331 step", 10_000_000, 10_000_000, step_num=8),
        _device("fusion.1", 1_000_000, 1_000_000, "fusion"),
    ]
    timeline = parse_xla(_doc(events))
    assert [(w.index, w.t_start, w.t_end, w.raw_index) for w in timeline.steps] == [
        (0, 0, 10_000, 7),
        (1, 10_000, 20_000, 8),
    ]


def test_xla_host_events_use_microseconds():
    events = [
        {"ph": "X", "name": "$core.py:331 step", "pid": 9, "tid": 1, "ts": 100, "dur": 50, "args": {"step_num": 0}},
        _device("fusion.1", 100_000_000, 1_000_000, "fusion"),
    ]
    (window,) = parse_xla(_doc(events)).steps
    assert (window.t_start, window.t_end) == (100_000, 150_000)
