import io

import numpy as np
import pytest

from vaeguard.errors import ForeignEvent
from vaeguard.events import ForensicEvent
from vaeguard.summarize import (
    FEATURE_DIM,
    FEATURE_NAMES,
    ActivityVector,
    IntervalKey,
    feature_index,
    format_vector_record,
    parse_vector_record,
    read_vectors,
    summarize_interval,
    vectors_to_matrix,
    window_events,
    write_vectors,
)

OPENAT = feature_index("syscall:openat")
CLOSE = feature_index("syscall:close")
FILE_DIR = feature_index("category:file_dir_access")
TOTAL = feature_index("total_events")
ERRORS = feature_index("error_returns")
PIDS = feature_index("distinct_pids")
ARG_BYTES = feature_index("total_arg_bytes")


def ev(t, sc="openat", pid=1, ret=0, arg_bytes=0, c="box"):
    return ForensicEvent(t, c, sc, pid, ret, arg_bytes)


def test_schema_layout():
    assert FEATURE_DIM == 66 + 10 + 4
    assert len(FEATURE_NAMES) == FEATURE_DIM
    assert FEATURE_NAMES[-4:] == (
        "total_events",
        "error_returns",
        "distinct_pids",
        "total_arg_bytes",
    )


def test_window_half_open_boundary():
    groups = list(window_events([ev(0.0), ev(29.9), ev(30.0)], 30.0))
    assert [key.interval_index for key, _ in groups] == [0, 1]
    assert [len(g) for _, g in groups] == [2, 1]


def test_window_emits_empty_gaps():
    groups = list(window_events([ev(5.0), ev(65.0)], 30.0))
    assert [key.interval_index for key, _ in groups] == [0, 1, 2]
    assert [len(g) for _, g in groups] == [1, 0, 1]


def test_window_empty_input():
    assert list(window_events([], 30.0)) == []


def test_window_rejects_mixed_containers():
    with pytest.raises(ForeignEvent):
        list(window_events([ev(0.0, c="a"), ev(1.0, c="b")], 30.0))


def test_window_key_invariant():
    (key, _), = window_events([ev(61.0)], 30.0)
    assert key.interval_index == 2
    assert key.start == 60.0
    assert key.start == key.interval_index * key.length


def test_summarize_counts():
    key = IntervalKey("box", 0, 30.0)
    events = [ev(1.0)] * 3 + [ev(2.0, sc="close")] * 2
    vector = summarize_interval(key, events)
    assert vector.features[OPENAT] == 3
    assert vector.features[CLOSE] == 2
    assert vector.features[FILE_DIR] == 5
    assert vector.features[TOTAL] == 5


def test_summarize_empty_group_is_zero_vector():
    vector = summarize_interval(IntervalKey("box", 4, 30.0), [])
    assert not vector.features.any()


def test_summarize_error_returns():
    key = IntervalKey("box", 0, 30.0)
    events = [ev(1.0, ret=0), ev(1.1, ret=-2), ev(1.2, ret=4)]
    assert summarize_interval(key, events).features[ERRORS] == 1


def test_summarize_untracked_feeds_aggregates_only():
    key = IntervalKey("box", 0, 30.0)
    vector = summarize_interval(
        key, [ev(1.0, sc="gettimeofday", pid=9, arg_bytes=100)]
    )
    assert vector.features[TOTAL] == 1
    assert vector.features[ARG_BYTES] == 100
    assert vector.features[PIDS] == 1
    assert vector.features.sum() == 102  # nothing else incremented


def test_summarize_distinct_pids_and_bytes():
    key = IntervalKey("box", 0, 30.0)
    events = [ev(1.0, pid=1, arg_bytes=10), ev(1.1, pid=2), ev(1.2, pid=1)]
    vector = summarize_interval(key, events)
    assert vector.features[PIDS] == 2
    assert vector.features[ARG_BYTES] == 10


def test_summarize_rejects_foreign_container():
    with pytest.raises(ForeignEvent):
        summarize_interval(IntervalKey("box", 0, 30.0), [ev(1.0, c="other")])


def test_summarize_rejects_event_outside_window():
    with pytest.raises(ForeignEvent):
        summarize_interval(IntervalKey("box", 0, 30.0), [ev(31.0)])


def test_permutation_invariance():
    key = IntervalKey("box", 0, 30.0)
    rng = np.random.default_rng(5)
    events = [
        ev(float(t), sc=sc, pid=int(pid), ret=int(ret), arg_bytes=int(b))
        for t, sc, pid, ret, b in zip(
            rng.uniform(0, 30, 50),
            rng.choice(["openat", "close", "socket", "futex"], 50),
            rng.integers(1, 5, 50),
            rng.choice([0, -1], 50),
            rng.integers(0, 100, 50),
        )
    ]
    shuffled = list(events)
    rng.shuffle(shuffled)
    a = summarize_interval(key, events)
    b = summarize_interval(key, shuffled)
    np.testing.assert_array_equal(a.features, b.features)


def test_additivity_except_distinct_pids():
    """Counts and sums add elementwise for disjoint event sets; the
    distinct-pid feature adds too when the pid sets are disjoint."""
    key = IntervalKey("box", 0, 30.0)
    group_a = [ev(1.0, pid=1), ev(2.0, sc="close", pid=1, ret=-1, arg_bytes=5)]
    group_b = [ev(3.0, sc="socket", pid=2), ev(4.0, sc="futex", pid=3)]
    combined = summarize_interval(key, group_a + group_b)
    np.testing.assert_array_equal(
        combined.features,
        summarize_interval(key, group_a).features
        + summarize_interval(key, group_b).features,
    )


def test_dimension_stability_across_intervals():
    events = [ev(float(t), sc=sc) for t, sc in zip(range(90), ["openat", "close", "socket"] * 30)]
    vectors = [summarize_interval(k, g) for k, g in window_events(events, 30.0)]
    assert {v.features.shape for v in vectors} == {(FEATURE_DIM,)}
    assert vectors_to_matrix(vectors).shape == (3, FEATURE_DIM)


def test_vector_record_round_trip():
    key = IntervalKey("box", 3, 30.0)
    vector = summarize_interval(key, [ev(95.0, arg_bytes=7)])
    line = format_vector_record(vector)
    parsed = parse_vector_record(line)
    assert parsed.key == key
    assert parsed.schema_version == vector.schema_version
    np.testing.assert_array_equal(parsed.features, vector.features)
    assert format_vector_record(parsed) == line


def test_vector_stream_round_trip():
    events = [ev(float(t)) for t in range(0, 90, 5)]
    vectors = [summarize_interval(k, g) for k, g in window_events(events, 30.0)]
    buffer = io.StringIO()
    assert write_vectors(vectors, buffer) == len(vectors)
    buffer.seek(0)
    loaded = read_vectors(buffer)
    assert [v.key for v in loaded] == [v.key for v in vectors]


def test_activity_vector_validates_dimension():
    with pytest.raises(ValueError):
        ActivityVector(key=IntervalKey("box", 0, 30.0), features=np.zeros(3))
