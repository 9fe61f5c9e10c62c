"""Forensic event model and the newline-delimited trace file format.

Traces substitute for live kernel capture: UTF-8, one record per line,
compact keys, files end with a newline.

    {"t": 1.5, "c": "nginx-1", "sc": "openat", "pid": 42, "ret": 3, "bytes": 0}

Fields: t (float seconds since trace epoch), c (container id),
sc (syscall name), pid (int >= 0), ret (int return code, negative means
error), bytes (int >= 0 payload size where applicable).
"""

from __future__ import annotations

import io
import json
import math
from dataclasses import dataclass
from typing import IO, Iterable, Iterator

from vaeguard.errors import MalformedRecord, OutOfOrderTimestamp

_FIELDS = ("t", "c", "sc", "pid", "ret", "bytes")


@dataclass(frozen=True)
class ForensicEvent:
    """One syscall record."""

    timestamp: float
    container_id: str
    syscall: str
    pid: int
    result: int
    arg_bytes: int


def _require(condition: bool, line_no: int, reason: str) -> None:
    if not condition:
        raise MalformedRecord(line_no, reason)


def parse_event_record(line: str, line_no: int = 0) -> ForensicEvent:
    """Parse one trace line; malformed syntax or field values raise."""
    try:
        raw = json.loads(line)
    except json.JSONDecodeError as exc:
        raise MalformedRecord(line_no, f"invalid record syntax: {exc.msg}") from exc
    _require(isinstance(raw, dict), line_no, "record is not an object")
    missing = [f for f in _FIELDS if f not in raw]
    _require(not missing, line_no, f"missing fields: {', '.join(missing)}")

    t = raw["t"]
    _require(
        isinstance(t, (int, float)) and not isinstance(t, bool),
        line_no,
        "t must be numeric",
    )
    t = float(t)
    _require(math.isfinite(t) and t >= 0.0, line_no, "t must be finite and >= 0")
    _require(
        isinstance(raw["c"], str) and raw["c"] != "", line_no, "c must be a non-empty string"
    )
    _require(
        isinstance(raw["sc"], str) and raw["sc"] != "",
        line_no,
        "sc must be a non-empty string",
    )
    for field in ("pid", "ret", "bytes"):
        _require(
            isinstance(raw[field], int) and not isinstance(raw[field], bool),
            line_no,
            f"{field} must be an integer",
        )
    _require(raw["pid"] >= 0, line_no, "pid must be >= 0")
    _require(raw["bytes"] >= 0, line_no, "bytes must be >= 0")

    return ForensicEvent(
        timestamp=t,
        container_id=raw["c"],
        syscall=raw["sc"],
        pid=raw["pid"],
        result=raw["ret"],
        arg_bytes=raw["bytes"],
    )


def format_event_record(event: ForensicEvent) -> str:
    """Canonical single-line serialization (no trailing newline)."""
    return json.dumps(
        {
            "t": event.timestamp,
            "c": event.container_id,
            "sc": event.syscall,
            "pid": event.pid,
            "ret": event.result,
            "bytes": event.arg_bytes,
        },
        separators=(",", ":"),
    )


def read_trace(source: IO[str] | io.TextIOBase) -> Iterator[ForensicEvent]:
    """Yield events in file order, enforcing non-decreasing timestamps."""
    last_t = -math.inf
    for index, line in enumerate(source):
        stripped = line.strip()
        if not stripped:
            continue
        event = parse_event_record(stripped, line_no=index)
        if event.timestamp < last_t:
            raise OutOfOrderTimestamp(index)
        last_t = event.timestamp
        yield event


def read_trace_file(path) -> list[ForensicEvent]:
    with open(path, "r", encoding="utf-8") as fh:
        return list(read_trace(fh))


def write_trace(events: Iterable[ForensicEvent], sink: IO[str]) -> int:
    """Write events one per line; returns the number of records written."""
    count = 0
    for event in events:
        sink.write(format_event_record(event))
        sink.write("\n")
        count += 1
    return count


def write_trace_file(events: Iterable[ForensicEvent], path) -> int:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        return write_trace(events, fh)
