"""Read task execution times from a cluster trace CSV.

Expected header: ``task_id,schedule_ts,finish_ts``.  Extra columns are allowed
and ignored.  The execution time of a task is ``finish_ts - schedule_ts``.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from decimal import Decimal, InvalidOperation
from pathlib import Path

from .dist import Empirical

REQUIRED_COLUMNS = ("task_id", "schedule_ts", "finish_ts")
TIME_UNITS = {"s": Decimal(1), "us": Decimal(1_000_000)}


class TraceError(ValueError):
    """Unusable trace input; ``row`` is the 1-based file line when known."""

    def __init__(self, message: str, row: int | None = None):
        self.row = row
        super().__init__(f"line {row}: {message}" if row is not None else message)


class EmptyTraceError(TraceError):
    pass


class TraceHeaderError(TraceError):
    pass


class TraceValueError(TraceError):
    pass


class NoValidRowsError(TraceError):
    pass


@dataclass(frozen=True)
class TraceRecord:
    task_id: str
    schedule_ts: float
    finish_ts: float

    @property
    def duration(self) -> float:
        return self.finish_ts - self.schedule_ts


@dataclass(frozen=True)
class TraceIngest:
    model: Empirical
    accepted: int
    rejected: int
    rejected_rows: tuple[int, ...] = ()


def _parse_ts(text: str, unit: str, row: int, column: str) -> Decimal:
    text = text.strip()
    try:
        if unit == "us":
            if not text.lstrip("+").isdigit():
                raise InvalidOperation
            value = Decimal(int(text))
        else:
            value = Decimal(text)
    except (InvalidOperation, ValueError):
        raise TraceValueError(f"{column} {text!r} is not a valid {unit} timestamp", row) from None
    if not value.is_finite() or value < 0:
        raise TraceValueError(f"{column} {text!r} must be a nonnegative finite number", row)
    return value


def read_records(path, time_unit: str = "s"):
    """Yield ``(line, record, duration)`` in file order, all times in seconds.

    ``duration`` is computed in exact decimal arithmetic before rounding, so it
    can differ in the last bit from ``record.duration``.
    """
    if time_unit not in TIME_UNITS:
        raise ValueError(f"unknown time unit {time_unit!r}; choose from {sorted(TIME_UNITS)}")
    scale = TIME_UNITS[time_unit]
    path = Path(path)
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or not any(h.strip() for h in header):
            raise EmptyTraceError(f"{path}: file is empty", 1)
        names = [h.strip() for h in header]
        missing = [c for c in REQUIRED_COLUMNS if c not in names]
        if missing:
            raise TraceHeaderError(f"header lacks column(s) {', '.join(missing)}", 1)
        idx = {c: names.index(c) for c in REQUIRED_COLUMNS}
        width = max(idx.values()) + 1
        for line, row in enumerate(reader, start=2):
            if not row or not any(cell.strip() for cell in row):
                continue
            if len(row) < width:
                raise TraceValueError(f"expected at least {width} fields, got {len(row)}", line)
            start = _parse_ts(row[idx["schedule_ts"]], time_unit, line, "schedule_ts")
            stop = _parse_ts(row[idx["finish_ts"]], time_unit, line, "finish_ts")
            # exact decimal difference, then one rounding to float
            dur = float((stop - start) / scale)
            record = TraceRecord(row[idx["task_id"]].strip(), float(start / scale), float(stop / scale))
            yield line, record, dur


def ingest_trace(path, time_unit: str = "s") -> TraceIngest:
    """Empirical execution-time model of every row with ``finish_ts >= schedule_ts``."""
    durations, rejected = [], []
    for line, _, dur in read_records(path, time_unit):
        if dur < 0 or not math.isfinite(dur):
            rejected.append(line)
        else:
            durations.append(dur)
    if not durations:
        raise NoValidRowsError(f"{path}: no row with finish_ts >= schedule_ts ({len(rejected)} rejected)")
    return TraceIngest(Empirical(durations), len(durations), len(rejected), tuple(rejected))
