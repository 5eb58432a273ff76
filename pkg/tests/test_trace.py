import numpy as np
import pytest
from hypothesis import HealthCheck, given, settings
from hypothesis import strategies as st

from singlefork.dist import Empirical
from singlefork.trace import (
    EmptyTraceError,
    NoValidRowsError,
    TraceHeaderError,
    TraceValueError,
    ingest_trace,
    read_records,
)


def write(path, text):
    path.write_text(text)
    return path


def test_three_rows(tmp_path):
    f = write(tmp_path / "t.csv", "task_id,schedule_ts,finish_ts\na,0,1\nb,10,12\nc,5.5,8.5\n")
    ing = ingest_trace(f)
    assert ing.model == Empirical([1, 2, 3])
    assert (ing.accepted, ing.rejected) == (3, 0)


def test_negative_duration_rows_are_skipped(tmp_path):
    f = write(tmp_path / "t.csv", "task_id,schedule_ts,finish_ts\na,0,1\nb,5,4\nc,1,3\n")
    ing = ingest_trace(f)
    assert ing.model == Empirical([1, 2])
    assert ing.rejected == 1 and ing.rejected_rows == (3,)


def test_extra_columns_and_order_are_ignored(tmp_path):
    f = write(tmp_path / "t.csv", "event,finish_ts,machine,task_id,schedule_ts\nFINISH,4,m1,a,1\nFINISH,2.5,m2,b,2\n")
    assert ingest_trace(f).model == Empirical([3, 0.5])


def test_microsecond_timestamps(tmp_path):
    f = write(tmp_path / "t.csv", "task_id,schedule_ts,finish_ts\na,1000000,3500000\nb,0,250000\n")
    assert ingest_trace(f, time_unit="us").model == Empirical([2.5, 0.25])
    g = write(tmp_path / "u.csv", "task_id,schedule_ts,finish_ts\na,1.5,3\n")
    with pytest.raises(TraceValueError):
        ingest_trace(g, time_unit="us")


def test_large_job(tmp_path):
    rng = np.random.default_rng(0)
    start = rng.uniform(0, 100, 1017)
    dur = rng.exponential(5, 1017)
    lines = ["task_id,schedule_ts,finish_ts"] + [f"t{i},{s!r},{s + d!r}" for i, (s, d) in enumerate(zip(start.tolist(), dur.tolist()))]
    f = write(tmp_path / "job.csv", "\n".join(lines) + "\n")
    ing = ingest_trace(f)
    assert ing.model.size == 1017
    assert np.allclose(ing.model.samples, np.sort(dur), rtol=1e-9, atol=1e-9)


def test_records_keep_timestamps(tmp_path):
    f = write(tmp_path / "t.csv", "task_id,schedule_ts,finish_ts\n x ,2,5\n")
    ((line, rec, dur),) = read_records(f)
    assert (line, rec.task_id, rec.schedule_ts, rec.finish_ts, rec.duration, dur) == (2, "x", 2.0, 5.0, 3.0, 3.0)


@pytest.mark.parametrize(
    "text, err, line",
    [
        ("", EmptyTraceError, 1),
        ("task_id,start,finish_ts\na,0,1\n", TraceHeaderError, 1),
        ("task_id,schedule_ts,finish_ts\na,0,abc\n", TraceValueError, 2),
        ("task_id,schedule_ts,finish_ts\na,0,1\nb,-1,1\n", TraceValueError, 3),
        ("task_id,schedule_ts,finish_ts\na,0,1\nb,2\n", TraceValueError, 3),
        ("task_id,schedule_ts,finish_ts\na,0,nan\n", TraceValueError, 2),
    ],
)
def test_typed_errors_with_line_numbers(tmp_path, text, err, line):
    f = write(tmp_path / "bad.csv", text)
    with pytest.raises(err) as info:
        ingest_trace(f)
    assert info.value.row == line
    assert f"line {line}" in str(info.value)


def test_no_valid_rows(tmp_path):
    f = write(tmp_path / "t.csv", "task_id,schedule_ts,finish_ts\na,5,1\n")
    with pytest.raises(NoValidRowsError):
        ingest_trace(f)
    g = write(tmp_path / "h.csv", "task_id,schedule_ts,finish_ts\n")
    with pytest.raises(NoValidRowsError):
        ingest_trace(g)


def test_missing_file(tmp_path):
    with pytest.raises(FileNotFoundError):
        ingest_trace(tmp_path / "absent.csv")


def test_unknown_unit(tmp_path):
    f = write(tmp_path / "t.csv", "task_id,schedule_ts,finish_ts\na,0,1\n")
    with pytest.raises(ValueError):
        ingest_trace(f, time_unit="ms")


@pytest.mark.invariant
@settings(suppress_health_check=[HealthCheck.function_scoped_fixture])
@given(
    st.lists(st.tuples(st.decimals(0, 1000, places=3), st.decimals(0, 100, places=3)), min_size=1, max_size=40),
    st.randoms(use_true_random=False),
)
def test_ingestion_is_order_insensitive(tmp_path, rows, rnd):
    lines = [f"t{i},{s},{s + d}" for i, (s, d) in enumerate(rows)]
    shuffled = lines[:]
    rnd.shuffle(shuffled)
    a = write(tmp_path / "a.csv", "task_id,schedule_ts,finish_ts\n" + "\n".join(lines) + "\n")
    b = write(tmp_path / "b.csv", "task_id,schedule_ts,finish_ts\n" + "\n".join(shuffled) + "\n")
    assert ingest_trace(a).model == ingest_trace(b).model
