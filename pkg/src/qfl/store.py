"""Durable store for assessment series, decision events, alerts and QR records.

Layout: append-only segment files (segment-NNNNNN.qfl) in one directory. Each
segment starts with the magic bytes "QFL1" and a version byte, followed by
length-prefixed records (4-byte big-endian length, then a UTF-8 JSON payload).
On open, all segments are replayed to rebuild the in-memory index.

Writes are serialized by a single lock (single-writer discipline); a batch
becomes visible to readers only after it is fully on disk, so readers never
observe a partially applied batch. Alert and QR documents are stored as
last-write-wins snapshots keyed by id; assessments and events are immutable.
"""

from __future__ import annotations

import csv
import io
import json
import os
import struct
import threading
from bisect import bisect_left, bisect_right
from dataclasses import dataclass
from datetime import datetime
from enum import Enum
from pathlib import Path
from typing import Any, IO, Iterable, Mapping

from .errors import (
    MissingRationale,
    OutOfOrderTimestamp,
    SchemaError,
    StorageFailure,
    UnknownElement,
    ValidationError,
)
from .model import AssessmentPoint, Layer, Provenance
from .timeutil import format_rfc3339, parse_rfc3339

_MAGIC = b"QFL1"
_VERSION = 1
_LENGTH = struct.Struct(">I")


class EventKind(str, Enum):
    QR_ADDED = "qr_added"
    QR_REJECTED_QE = "qr_rejected_qe"
    QR_REJECTED_PM = "qr_rejected_pm"
    QR_POSTPONED = "qr_postponed"
    QR_DERIVED = "qr_derived"
    THRESHOLD_CHANGED = "threshold_changed"


REJECTION_KINDS = frozenset({EventKind.QR_REJECTED_QE, EventKind.QR_REJECTED_PM})


@dataclass(frozen=True)
class DecisionEvent:
    event_id: str
    kind: EventKind
    subject_id: str
    timestamp: datetime
    rationale: str = ""

    def __post_init__(self) -> None:
        if self.kind in REJECTION_KINDS and not self.rationale.strip():
            raise MissingRationale(
                f"{self.kind.value} event for {self.subject_id!r} needs a rationale"
            )

    def to_jsonable(self) -> dict[str, Any]:
        return {
            "event_id": self.event_id,
            "kind": self.kind.value,
            "subject_id": self.subject_id,
            "timestamp": format_rfc3339(self.timestamp),
            "rationale": self.rationale,
        }

    @staticmethod
    def from_jsonable(doc: Mapping[str, Any]) -> "DecisionEvent":
        return DecisionEvent(
            event_id=str(doc["event_id"]),
            kind=EventKind(doc["kind"]),
            subject_id=str(doc["subject_id"]),
            timestamp=parse_rfc3339(doc["timestamp"]),
            rationale=str(doc.get("rationale", "")),
        )


@dataclass(frozen=True)
class HistorySeries:
    element_id: str
    points: tuple[AssessmentPoint, ...]

    def to_jsonable(self) -> dict[str, Any]:
        return {
            "element_id": self.element_id,
            "points": [p.to_jsonable() for p in self.points],
        }


def _point_to_doc(point: AssessmentPoint) -> dict[str, Any]:
    return point.to_jsonable()


def _point_from_doc(doc: Mapping[str, Any]) -> AssessmentPoint:
    return AssessmentPoint(
        element_id=str(doc["element_id"]),
        layer=Layer(doc["layer"]),
        timestamp=parse_rfc3339(doc["timestamp"]),
        value=float(doc["value"]),
        provenance=Provenance(doc["provenance"]),
    )


class Store:
    """Single-writer, multi-reader store over append-only segments."""

    def __init__(self, directory: str | Path, *, segment_max_bytes: int = 1 << 20) -> None:
        self._dir = Path(directory)
        self._dir.mkdir(parents=True, exist_ok=True)
        self._segment_max_bytes = segment_max_bytes
        self._lock = threading.RLock()
        self._series: dict[str, list[AssessmentPoint]] = {}
        self._events: dict[str, DecisionEvent] = {}
        self._docs: dict[str, dict[str, dict[str, Any]]] = {}
        self._segment_paths = sorted(self._dir.glob("segment-*.qfl"))
        self._replay()
        self._writer: IO[bytes] | None = None
        self._open_tail_segment()

    # --- segment plumbing -------------------------------------------------

    def _open_tail_segment(self) -> None:
        if not self._segment_paths:
            self._start_segment()
            return
        path = self._segment_paths[-1]
        self._writer = open(path, "ab")

    def _start_segment(self) -> None:
        index = len(self._segment_paths) + 1
        path = self._dir / f"segment-{index:06d}.qfl"
        writer = open(path, "ab")
        writer.write(_MAGIC + bytes([_VERSION]))
        writer.flush()
        self._segment_paths.append(path)
        if self._writer is not None:
            self._writer.close()
        self._writer = writer

    def _replay(self) -> None:
        for path in self._segment_paths:
            with open(path, "rb") as handle:
                header = handle.read(5)
                if len(header) < 5 or header[:4] != _MAGIC:
                    raise StorageFailure(f"{path.name}: bad segment header")
                if header[4] != _VERSION:
                    raise StorageFailure(f"{path.name}: unsupported version {header[4]}")
                while True:
                    prefix = handle.read(_LENGTH.size)
                    if not prefix:
                        break
                    if len(prefix) < _LENGTH.size:
                        # Torn tail write; everything before it is intact.
                        break
                    (length,) = _LENGTH.unpack(prefix)
                    payload = handle.read(length)
                    if len(payload) < length:
                        break
                    self._apply(json.loads(payload.decode("utf-8")))

    def _apply(self, entry: Mapping[str, Any]) -> None:
        kind = entry.get("kind")
        data = entry.get("data", {})
        if kind == "assessment":
            point = _point_from_doc(data)
            points = self._series.setdefault(point.element_id, [])
            if points and points[-1].timestamp == point.timestamp:
                points[-1] = point
            else:
                points.append(point)
        elif kind == "event":
            event = DecisionEvent.from_jsonable(data)
            self._events[event.event_id] = event
        else:
            doc_id = str(data.get("_doc_id", ""))
            self._docs.setdefault(str(kind), {})[doc_id] = dict(data.get("doc", {}))

    def _write_entries(self, entries: list[dict[str, Any]]) -> None:
        writer = self._writer
        if writer is None:
            raise StorageFailure("store is closed")
        try:
            for entry in entries:
                payload = json.dumps(entry, separators=(",", ":")).encode("utf-8")
                writer.write(_LENGTH.pack(len(payload)) + payload)
            writer.flush()
            os.fsync(writer.fileno())
        except OSError as exc:
            raise StorageFailure(f"write failed: {exc}") from exc
        if writer.tell() >= self._segment_max_bytes:
            self._start_segment()

    def close(self) -> None:
        with self._lock:
            if self._writer is not None:
                self._writer.close()
                self._writer = None

    # --- assessments --------------------------------------------------------

    def append_assessment(self, points: Iterable[AssessmentPoint]) -> None:
        """Durably append assessment points.

        Per element, timestamps must not move backwards; re-appending at the
        stored tail timestamp replaces that point (idempotent re-assessment).
        """
        batch = list(points)
        if not batch:
            return
        with self._lock:
            staged_tail: dict[str, datetime] = {}
            for point in batch:
                stored = self._series.get(point.element_id)
                tail = staged_tail.get(
                    point.element_id,
                    stored[-1].timestamp if stored else None,
                )
                if tail is not None and point.timestamp < tail:
                    raise OutOfOrderTimestamp(
                        f"{point.element_id!r}: {format_rfc3339(point.timestamp)} is "
                        f"older than stored tail {format_rfc3339(tail)}"
                    )
                staged_tail[point.element_id] = point.timestamp
            self._write_entries(
                [{"kind": "assessment", "data": _point_to_doc(p)} for p in batch]
            )
            for point in batch:
                series = self._series.setdefault(point.element_id, [])
                if series and series[-1].timestamp == point.timestamp:
                    series[-1] = point
                else:
                    series.append(point)

    def query_range(self, element_id: str, from_: datetime, to: datetime) -> HistorySeries:
        """All points with from_ <= t <= to, time-ordered. Bounds inclusive."""
        if from_ > to:
            raise ValidationError("query range start is after its end")
        with self._lock:
            points = self._series.get(element_id)
            if points is None:
                raise UnknownElement(f"no history for element {element_id!r}")
            stamps = [p.timestamp for p in points]
            lo = bisect_left(stamps, from_)
            hi = bisect_right(stamps, to)
            return HistorySeries(element_id=element_id, points=tuple(points[lo:hi]))

    def full_series(self, element_id: str) -> HistorySeries:
        with self._lock:
            points = self._series.get(element_id)
            if points is None:
                raise UnknownElement(f"no history for element {element_id!r}")
            return HistorySeries(element_id=element_id, points=tuple(points))

    def latest_assessment(self) -> dict[str, AssessmentPoint]:
        """Most recent point per element."""
        with self._lock:
            return {
                element_id: points[-1]
                for element_id, points in self._series.items()
                if points
            }

    def element_ids(self) -> list[str]:
        with self._lock:
            return sorted(self._series)

    # --- decision events ------------------------------------------------------

    def record_event(self, event: DecisionEvent) -> None:
        with self._lock:
            self._write_entries([{"kind": "event", "data": event.to_jsonable()}])
            self._events[event.event_id] = event

    def list_events(
        self,
        *,
        subject_id: str | None = None,
        from_: datetime | None = None,
        to: datetime | None = None,
    ) -> list[DecisionEvent]:
        with self._lock:
            events = sorted(
                self._events.values(), key=lambda e: (e.timestamp, e.event_id)
            )
        if subject_id is not None:
            events = [e for e in events if e.subject_id == subject_id]
        if from_ is not None:
            events = [e for e in events if e.timestamp >= from_]
        if to is not None:
            events = [e for e in events if e.timestamp <= to]
        return events

    # --- alert / QR documents (last write wins) -------------------------------

    def put_doc(self, kind: str, doc_id: str, doc: Mapping[str, Any]) -> None:
        with self._lock:
            self._write_entries(
                [{"kind": kind, "data": {"_doc_id": doc_id, "doc": dict(doc)}}]
            )
            self._docs.setdefault(kind, {})[doc_id] = dict(doc)

    def get_doc(self, kind: str, doc_id: str) -> dict[str, Any] | None:
        with self._lock:
            doc = self._docs.get(kind, {}).get(doc_id)
            return dict(doc) if doc is not None else None

    def docs(self, kind: str) -> dict[str, dict[str, Any]]:
        with self._lock:
            return {k: dict(v) for k, v in self._docs.get(kind, {}).items()}

    # --- export -----------------------------------------------------------------

    def export_csv(self, out: IO[str] | None = None) -> str:
        """Emit the full assessment history as CSV."""
        buffer = out or io.StringIO()
        writer = csv.writer(buffer, lineterminator="\n")
        writer.writerow(["element_id", "timestamp", "value", "provenance"])
        with self._lock:
            for element_id in sorted(self._series):
                for point in self._series[element_id]:
                    writer.writerow(
                        [
                            element_id,
                            format_rfc3339(point.timestamp),
                            repr(point.value),
                            point.provenance.value,
                        ]
                    )
        return buffer.getvalue() if isinstance(buffer, io.StringIO) else ""


def parse_event_document(doc: Mapping[str, Any]) -> DecisionEvent:
    """Build a DecisionEvent from an untrusted mapping (service/CLI edge)."""
    try:
        return DecisionEvent.from_jsonable(doc)
    except (KeyError, ValueError) as exc:
        raise SchemaError(f"bad decision event document: {exc}") from exc
