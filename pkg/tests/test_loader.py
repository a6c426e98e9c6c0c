import pytest

from tracekit.errors import DialectMismatch, ParseError
from tracekit.metrics import run_suite
from tracekit.trace import Dialect, EventClass, StepKind, detect_dialect, load_trace


def _kernel_view(trace):
    return [
        [
            (e.t_start, e.duration, str(e.klass), e.collective_kind, e.message_bytes, e.group_size)
            for e in timeline.kernel_events()
        ]
        for timeline in trace.ranks
    ]


def _step_view(trace):
    return [[(w.index, w.t_start, w.t_end) for w in timeline.steps] for timeline in trace.ranks]


def test_two_kineto_files(trace_files, workloads):
    paths = trace_files([workloads.standard(), workloads.standard()])
    trace = load_trace(paths)
    assert trace.dialect == Dialect.KINETO_GPU
    assert trace.num_ranks == 2
    assert trace.clock_unit_note.original_unit == "us"
    assert [t.rank for t in trace.ranks] == [0, 1]


def test_ranks_follow_sorted_paths(trace_files, workloads):
    paths = trace_files([workloads.standard(base=1_000), workloads.standard(base=500_000)])
    trace = load_trace(list(reversed(paths)))
    assert trace.ranks[0].source == str(paths[0])
    assert trace.ranks[1].steps[0].t_start == 500_000_000


def test_mixed_dialects_are_rejected(tmp_path, trace_files, workloads):
    (kineto,) = trace_files([workloads.standard()], dialect="kineto", prefix="a")
    (xla,) = trace_files([workloads.standard()], dialect="xla", prefix="b")
    with pytest.raises(DialectMismatch):
        load_trace([kineto, xla])


def test_detects_xla_from_device_picoseconds(trace_files, workloads):
    (path,) = trace_files([workloads.standard()], dialect="xla")
    assert detect_dialect(path) == Dialect.XLA_TPU


def test_undetectable_dialect(raw_trace):
    path = raw_trace([{"ph": "X", "name": "aten::mm", "cat": "cpu_op", "ts": 0, "dur": 1}])
    with pytest.raises(ParseError):
        detect_dialect(path)


def test_gzip_input(trace_files, workloads):
    plain = load_trace(trace_files([workloads.standard()], prefix="plain"))
    packed = load_trace(trace_files([workloads.standard()], prefix="packed", gz=True))
    assert _kernel_view(plain) == _kernel_view(packed)


def test_explicit_dialect_and_workers(trace_files, workloads):
    paths = trace_files([workloads.standard(), workloads.standard(base=7_000)])
    serial = load_trace(paths, dialect="KinetoGpu")
    threaded = load_trace(paths, dialect="KinetoGpu", workers=2)
    assert _kernel_view(serial) == _kernel_view(threaded)
    assert _step_view(serial) == _step_view(threaded)


def test_no_paths():
    with pytest.raises(ValueError):
        load_trace([])


def test_inference_relabelling(trace_files, workloads):
    trace = load_trace(trace_files([workloads.inference()]), phase="inference")
    timeline = trace.ranks[0]
    assert len(timeline.steps_of(StepKind.PREFILL)) == 1
    assert len(timeline.steps_of(StepKind.DECODE_STEP)) == 128
    assert timeline.steps[0].kind == StepKind.PREFILL

    no_prefill = load_trace(trace_files([workloads.inference()], prefix="d"), phase="inference", first_is_prefill=False)
    assert len(no_prefill.ranks[0].steps_of(StepKind.DECODE_STEP)) == 129


def test_dialects_normalize_identically(trace_files, workloads, make_card):
    """The same workload encoded as Kineto and as XLA yields the same normalized events."""
    shapes = [workloads.standard(base=1_000), workloads.standard(base=2_000_000)]
    kineto = load_trace(trace_files(shapes, dialect="kineto", prefix="gpu"))
    xla = load_trace(trace_files(shapes, dialect="xla", prefix="tpu"))

    assert kineto.dialect == Dialect.KINETO_GPU
    assert xla.dialect == Dialect.XLA_TPU
    assert _kernel_view(kineto) == _kernel_view(xla)
    assert _step_view(kineto) == _step_view(xla)
    assert len(xla.ranks[0].of_class(EventClass.MEM_TRANSFER)) == 6

    card = make_card()
    shared = [
        "avg_step_time",
        "communication_fraction",
        "compute_comm_overlap",
        "total_communication_time",
        "bw_allreduce",
        "traffic_volume",
        "load_imbalance_ratio",
        "average_memory_bandwidth",
    ]
    gpu = run_suite(card, kineto, only=shared).values()
    tpu = run_suite(card, xla, only=shared).values()
    assert gpu.keys() == tpu.keys()
    for key, value in gpu.items():
        assert tpu[key] == pytest.approx(value, rel=1e-9), key
