"""Newline-delimited trace files and deterministic replay.

One record per line, UTF-8 with LF endings, written as a flat JSON object
with keys in a fixed order::

    {"t":0,"kind":"telemetry","icmp_errors_per_sec":0,"packets_sent_per_sec":20}
    {"t":1.5,"kind":"antigen","id":1003,"label":"nmap"}

Numbers carry at most six decimal places, trailing zeros dropped, never an
exponent. Identical records always serialize to identical bytes.
"""

from __future__ import annotations

import enum
import heapq
import json
import logging
import math
import os
import time
from dataclasses import dataclass
from pathlib import Path
from typing import IO, Callable, Iterable, Iterator, List, Optional, Union

from .core import Antigen, ValidationError
from .signals import RawTelemetry, SignalPipeline
from .tissue import Tissue

logger = logging.getLogger(__name__)

TELEMETRY = "telemetry"
ANTIGEN = "antigen"
FIELDS = {
    TELEMETRY: ("icmp_errors_per_sec", "packets_sent_per_sec"),
    ANTIGEN: ("id", "label"),
}


class TraceParseError(ValidationError):
    def __init__(self, lineno: int, message: str):
        super().__init__(f"line {lineno}: {message}")
        self.lineno = lineno


class TraceOrderError(TraceParseError):
    pass


@dataclass(frozen=True)
class TraceRecord:
    t: float
    kind: str
    icmp_errors_per_sec: float = 0.0
    packets_sent_per_sec: float = 0.0
    id: int = 0
    label: Optional[str] = None

    @classmethod
    def telemetry(cls, t: float, icmp_errors_per_sec: float, packets_sent_per_sec: float) -> "TraceRecord":
        return cls(t, TELEMETRY, icmp_errors_per_sec=icmp_errors_per_sec,
                   packets_sent_per_sec=packets_sent_per_sec)

    @classmethod
    def antigen(cls, t: float, id: int, label: Optional[str] = None) -> "TraceRecord":
        return cls(t, ANTIGEN, id=id, label=label)

    def __post_init__(self):
        if self.kind not in FIELDS:
            raise ValidationError(f"unknown record kind {self.kind!r}")
        if not (math.isfinite(self.t) and self.t >= 0):
            raise ValidationError(f"record time must be finite and >= 0, got {self.t!r}")
        if self.kind == TELEMETRY:
            RawTelemetry(self.t, self.icmp_errors_per_sec, self.packets_sent_per_sec)
        else:
            Antigen(self.id, self.label)

    def as_telemetry(self) -> RawTelemetry:
        return RawTelemetry(self.t, self.icmp_errors_per_sec, self.packets_sent_per_sec)

    def as_antigen(self) -> Antigen:
        return Antigen(self.id, self.label)


def format_number(x: float) -> str:
    if isinstance(x, int) and not isinstance(x, bool):
        return str(x)
    text = f"{x:.6f}".rstrip("0").rstrip(".")
    return "0" if text in ("-0", "") else text


def encode_record(rec: TraceRecord) -> str:
    parts = [f'"t":{format_number(rec.t)}', f'"kind":"{rec.kind}"']
    if rec.kind == TELEMETRY:
        parts.append(f'"icmp_errors_per_sec":{format_number(rec.icmp_errors_per_sec)}')
        parts.append(f'"packets_sent_per_sec":{format_number(rec.packets_sent_per_sec)}')
    else:
        parts.append(f'"id":{rec.id}')
        parts.append(f'"label":{json.dumps(rec.label, ensure_ascii=False)}')
    return "{" + ",".join(parts) + "}"


def _check_sorted(records: List[TraceRecord]) -> None:
    for i in range(1, len(records)):
        if records[i].t < records[i - 1].t:
            raise ValidationError(
                f"records not time-sorted: index {i} has t={records[i].t} after t={records[i - 1].t}"
            )


def dumps(records: Iterable[TraceRecord]) -> str:
    records = list(records)
    _check_sorted(records)
    return "".join(encode_record(r) + "\n" for r in records)


def write_trace(records: Iterable[TraceRecord], destination: Union[str, os.PathLike, IO[bytes]]) -> bytes:
    """Serialize ``records``; writes to ``destination`` and returns the bytes."""
    data = dumps(records).encode("utf-8")
    if hasattr(destination, "write"):
        destination.write(data)
    else:
        path = Path(destination)
        tmp = path.with_name(path.name + ".tmp")
        tmp.write_bytes(data)
        os.replace(tmp, path)
    return data


def _number(obj: dict, key: str, lineno: int) -> float:
    value = obj[key]
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise TraceParseError(lineno, f"field {key!r} must be a number, got {value!r}")
    return float(value)


def parse_line(line: str, lineno: int) -> TraceRecord:
    try:
        obj = json.loads(line)
    except json.JSONDecodeError as exc:
        raise TraceParseError(lineno, f"invalid JSON: {exc.msg}") from None
    if not isinstance(obj, dict):
        raise TraceParseError(lineno, "record is not an object")
    kind = obj.get("kind")
    if kind not in FIELDS:
        raise TraceParseError(lineno, f"unknown kind {kind!r}")
    expected = {"t", "kind", *FIELDS[kind]}
    missing = expected - obj.keys()
    if missing:
        raise TraceParseError(lineno, f"missing fields {sorted(missing)}")
    extra = obj.keys() - expected
    if extra:
        raise TraceParseError(lineno, f"unexpected fields {sorted(extra)}")
    t = _number(obj, "t", lineno)
    try:
        if kind == TELEMETRY:
            return TraceRecord.telemetry(
                t, _number(obj, "icmp_errors_per_sec", lineno), _number(obj, "packets_sent_per_sec", lineno)
            )
        label = obj["label"]
        if label is not None and not isinstance(label, str):
            raise TraceParseError(lineno, f"label must be a string or null, got {label!r}")
        if isinstance(obj["id"], bool) or not isinstance(obj["id"], int):
            raise TraceParseError(lineno, f"id must be an integer, got {obj['id']!r}")
        return TraceRecord.antigen(t, obj["id"], label)
    except TraceParseError:
        raise
    except ValidationError as exc:
        raise TraceParseError(lineno, str(exc)) from None


def loads(text: str, strict: bool = True) -> List[TraceRecord]:
    """Parse trace text.

    Non-strict mode skips malformed lines with a warning and stable-sorts
    the result by time instead of rejecting out-of-order records.
    """
    records: List[TraceRecord] = []
    for lineno, line in enumerate(text.split("\n"), start=1):
        if not line.strip():
            continue
        try:
            rec = parse_line(line, lineno)
        except TraceParseError as exc:
            if strict:
                raise
            logger.warning("skipping %s", exc)
            continue
        if strict and records and rec.t < records[-1].t:
            raise TraceOrderError(lineno, f"t={rec.t} is earlier than previous t={records[-1].t}")
        records.append(rec)
    if not strict:
        records.sort(key=lambda r: r.t)
    return records


def read_trace(source: Union[str, os.PathLike, IO], strict: bool = True) -> List[TraceRecord]:
    if hasattr(source, "read"):
        data = source.read()
    else:
        data = Path(source).read_bytes()
    if isinstance(data, bytes):
        data = data.decode("utf-8")
    return loads(data, strict=strict)


class ReplayMode(enum.Enum):
    AS_FAST_AS_POSSIBLE = "as_fast_as_possible"
    REALTIME = "realtime"


# Equal-time ordering: antigen, then telemetry ingestion, then the signal tick.
_ANTIGEN, _TELEMETRY, _TICK = 0, 1, 2


def tick_times(records: List[TraceRecord], tick: float) -> List[float]:
    """Tick grid k*tick from the first telemetry record to the last record."""
    first = next((r.t for r in records if r.kind == TELEMETRY), None)
    if first is None:
        return []
    last = records[-1].t
    k = math.ceil(first / tick - 1e-9)
    times = []
    while k * tick <= last + 1e-9:
        times.append(k * tick)
        k += 1
    return times


def merged_events(records: List[TraceRecord], tick: float) -> Iterator[tuple]:
    """Yield (t, priority, seq, payload) in delivery order."""
    streams = [
        ((r.t, _ANTIGEN if r.kind == ANTIGEN else _TELEMETRY, i, r) for i, r in enumerate(records)),
        ((t, _TICK, i, None) for i, t in enumerate(tick_times(records, tick))),
    ]
    return heapq.merge(*streams)


def replay(
    records: List[TraceRecord],
    pipeline: SignalPipeline,
    engine: Tissue,
    mode: ReplayMode = ReplayMode.AS_FAST_AS_POSSIBLE,
    speed: float = 1.0,
    sleep: Callable[[float], None] = time.sleep,
    clock: Callable[[], float] = time.monotonic,
) -> Tissue:
    """Drive ``engine`` from ``records``; returns the engine after finalize().

    In realtime mode the driver sleeps so that trace time advances at
    ``speed`` times wall-clock rate. Delivery order is the same in both modes.
    """
    records = list(records)
    _check_sorted(records)
    mode = ReplayMode(mode)
    if mode is ReplayMode.REALTIME and not speed > 0:
        raise ValidationError(f"speed must be > 0, got {speed!r}")
    wall_start = clock()
    trace_start = records[0].t if records else 0.0
    for t, priority, _, rec in merged_events(records, pipeline.cfg.tick):
        if mode is ReplayMode.REALTIME:
            delay = (t - trace_start) / speed - (clock() - wall_start)
            if delay > 0:
                sleep(delay)
        if priority == _ANTIGEN:
            engine.on_antigen(rec.as_antigen(), t)
        elif priority == _TELEMETRY:
            pipeline.ingest(rec.as_telemetry())
        else:
            engine.on_signal_tick(pipeline.tick(t), t)
    engine.finalize()
    return engine
