import numpy as np
import pytest

from tracekit.trace.model import EventClass, StepWindow, TraceEvent
from tracekit.utils.intervals import EMPTY, clip, intersect_len, intersection, restrict, subtract_len, union_of

SPAN = 1_000_000


def _random_intervals(rng: np.random.Generator, n: int, max_len: int = 50_000) -> list[tuple[int, int]]:
    starts = rng.integers(0, SPAN, size=n)
    lengths = rng.integers(0, max_len, size=n)
    return [(int(s), int(min(s + length, SPAN))) for s, length in zip(starts, lengths)]


def _mask(intervals) -> np.ndarray:
    mask = np.zeros(SPAN, dtype=bool)
    for start, end in intervals:
        mask[start:end] = True
    return mask


def _runs(mask: np.ndarray) -> tuple[tuple[int, int], ...]:
    """Maximal runs of set points, as half-open intervals."""
    padded = np.concatenate(([False], mask, [False])).astype(np.int8)
    edges = np.flatnonzero(np.diff(padded))
    return tuple((int(a), int(b)) for a, b in zip(edges[::2], edges[1::2]))


def test_union_examples():
    assert union_of([]) == EMPTY
    assert union_of([]).length == 0
    merged = union_of([(0, 10), (5, 15)])
    assert merged.intervals == ((0, 15),)
    assert merged.length == 15


def test_union_merges_adjacent_and_drops_empty():
    assert union_of([(5, 9), (0, 5), (12, 12)]).intervals == ((0, 9),)


def test_union_rejects_reversed_interval():
    with pytest.raises(ValueError):
        union_of([(10, 5)])


def test_intersection_examples():
    assert intersect_len(union_of([(0, 10)]), union_of([(5, 15)])) == 5
    assert intersect_len(union_of([(0, 10)]), union_of([(20, 30)])) == 0


def test_subtraction_examples():
    a = union_of([(0, 10)])
    assert subtract_len(a, union_of([(0, 5)])) == 5
    assert subtract_len(a, a) == 0


def _event(start: int, end: int, klass=EventClass.COMPUTE) -> TraceEvent:
    return TraceEvent(0, "0:7", "k", start, end - start, klass)


def test_clip_examples():
    window = StepWindow(0, 0, 10)
    assert clip([_event(5, 20)], window) == [(5, 10)]
    assert clip([_event(12, 20)], window) == []


def test_clip_filters_by_class():
    window = StepWindow(0, 0, 100)
    events = [_event(0, 10), _event(20, 30, EventClass.MEM_TRANSFER)]
    assert clip(events, window, klasses=[EventClass.MEM_TRANSFER]) == [(20, 30)]


def test_union_matches_bit_array_oracle():
    rng = np.random.default_rng(7)
    for _ in range(1000):
        raw = _random_intervals(rng, int(rng.integers(0, 20)))
        mask = _mask(raw)
        merged = union_of(raw)
        assert merged.length == int(mask.sum())
        assert merged.intervals == _runs(mask)


def test_union_of_1000_intervals_matches_oracle():
    rng = np.random.default_rng(11)
    raw = _random_intervals(rng, 1000, max_len=2_000)
    assert union_of(raw).length == int(_mask(raw).sum())


def test_pairwise_operations_match_bit_array_oracle():
    rng = np.random.default_rng(13)
    for _ in range(1000):
        raw_a = _random_intervals(rng, int(rng.integers(0, 12)))
        raw_b = _random_intervals(rng, int(rng.integers(0, 12)))
        mask_a, mask_b = _mask(raw_a), _mask(raw_b)
        a, b = union_of(raw_a), union_of(raw_b)
        assert intersect_len(a, b) == int((mask_a & mask_b).sum())
        assert subtract_len(a, b) == int((mask_a & ~mask_b).sum())
        assert intersection(a, b).intervals == _runs(mask_a & mask_b)


def test_clip_and_restrict_match_oracle():
    rng = np.random.default_rng(17)
    for _ in range(100):
        raw = _random_intervals(rng, 100, max_len=20_000)
        lo = int(rng.integers(0, SPAN // 2))
        hi = lo + int(rng.integers(1, SPAN // 2))
        window = StepWindow(0, lo, hi)
        inside = _mask(raw)
        inside[:lo] = False
        inside[hi:] = False

        clipped = clip([_event(s, e) for s, e in raw], window)
        assert all(lo <= s < e <= hi for s, e in clipped)
        assert union_of(clipped).intervals == _runs(inside)
        assert restrict(union_of(raw), lo, hi).intervals == _runs(inside)
