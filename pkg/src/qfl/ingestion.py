"""Snapshot ingestion: parse tool exports into typed records and apply metric
evaluators.

Connectors are file-based: each development tool exports one JSON snapshot
document with a {source_id, source_kind, captured_at} header and a records
list. Parsers are stateless; records keep unknown extra fields untouched so
downstream serialization is lossless.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from datetime import datetime
from enum import Enum
from typing import Any, Iterable, Mapping

from .errors import FieldMissing, SchemaError, SourceMissing
from .model import QualityModel, evaluate_metric
from .timeutil import format_rfc3339, parse_rfc3339, utcnow


class SourceKind(str, Enum):
    STATIC_ANALYSIS = "static_analysis"
    ISSUE_TRACKER = "issue_tracker"
    CI_BUILDS = "ci_builds"
    VCS_LOG = "vcs_log"
    BACKLOG = "backlog"


# Statuses treated as "no longer open" unless a metric configures otherwise.
DEFAULT_CLOSED_STATUSES = ("Closed", "Rejected")


@dataclass(frozen=True)
class SourceSnapshot:
    source_id: str
    source_kind: SourceKind
    captured_at: datetime
    records: tuple[Mapping[str, Any], ...]

    def to_jsonable(self) -> dict[str, Any]:
        return {
            "source_id": self.source_id,
            "source_kind": self.source_kind.value,
            "captured_at": format_rfc3339(self.captured_at),
            "records": [dict(record) for record in self.records],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_jsonable(), indent=2)


def parse_snapshot(document: str | bytes | Mapping[str, Any],
                   source_kind: SourceKind | str | None = None) -> SourceSnapshot:
    """Parse and validate one snapshot document.

    source_kind, when given, must agree with the document header; a document
    without a source_kind header inherits the argument.
    """
    if isinstance(document, (str, bytes)):
        try:
            doc = json.loads(document)
        except json.JSONDecodeError as exc:
            raise SchemaError(f"snapshot document is not valid JSON: {exc}") from exc
    else:
        doc = document
    if not isinstance(doc, Mapping):
        raise SchemaError("snapshot document must be a JSON object")

    if "source_id" not in doc:
        raise SchemaError("snapshot missing key 'source_id'")
    declared_kind = doc.get("source_kind")
    if declared_kind is None and source_kind is None:
        raise SchemaError("snapshot missing key 'source_kind'")
    if source_kind is not None:
        wanted = SourceKind(source_kind)
        if declared_kind is not None and SourceKind(str(declared_kind)) is not wanted:
            raise SchemaError(
                f"snapshot declares source_kind {declared_kind!r}, expected {wanted.value!r}"
            )
        kind = wanted
    else:
        try:
            kind = SourceKind(str(declared_kind))
        except ValueError:
            raise SchemaError(f"unknown source_kind {declared_kind!r}") from None

    if "captured_at" not in doc:
        raise SchemaError("snapshot missing key 'captured_at'")
    captured_at = parse_rfc3339(doc["captured_at"])
    if captured_at > utcnow():
        raise SchemaError(f"captured_at {doc['captured_at']!r} lies in the future")

    raw_records = doc.get("records", [])
    if not isinstance(raw_records, list):
        raise SchemaError("'records' must be a list")
    validator = _VALIDATORS[kind]
    records = []
    for index, record in enumerate(raw_records):
        if not isinstance(record, Mapping):
            raise SchemaError(f"records[{index}] must be an object")
        validator(record, index)
        records.append(dict(record))
    return SourceSnapshot(
        source_id=str(doc["source_id"]),
        source_kind=kind,
        captured_at=captured_at,
        records=tuple(records),
    )


def _require(record: Mapping[str, Any], index: int, field: str) -> Any:
    if field not in record:
        raise SchemaError(f"records[{index}] missing field {field!r}")
    return record[field]


def _number(record: Mapping[str, Any], index: int, field: str) -> float:
    value = _require(record, index, field)
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise SchemaError(f"records[{index}] field {field!r} must be numeric")
    return float(value)


def _count(record: Mapping[str, Any], index: int, field: str) -> int:
    value = _require(record, index, field)
    if isinstance(value, bool) or not isinstance(value, int):
        raise SchemaError(f"records[{index}] field {field!r} must be an integer")
    if value < 0:
        raise SchemaError(f"records[{index}] field {field!r} must be nonnegative")
    return value


def _density(record: Mapping[str, Any], index: int, field: str) -> float:
    value = _number(record, index, field)
    if not 0.0 <= value <= 1.0:
        raise SchemaError(f"records[{index}] field {field!r} must lie in [0, 1]")
    return value


def _timestamp(record: Mapping[str, Any], index: int, field: str) -> datetime:
    value = _require(record, index, field)
    try:
        return parse_rfc3339(value)
    except SchemaError:
        raise SchemaError(f"records[{index}] field {field!r} is not RFC 3339") from None


def _validate_static_analysis(record: Mapping[str, Any], index: int) -> None:
    _require(record, index, "file")
    _density(record, index, "comment_density")
    _number(record, index, "complexity")
    _density(record, index, "duplicated_block_density")
    _count(record, index, "critical_or_blocker_violations")


def _validate_issue_tracker(record: Mapping[str, Any], index: int) -> None:
    for field in ("id", "type", "status", "severity"):
        _require(record, index, field)
    created = _timestamp(record, index, "created_at")
    if record.get("closed_at") is not None:
        closed = _timestamp(record, index, "closed_at")
        if closed < created:
            raise SchemaError(
                f"records[{index}] field 'closed_at' precedes 'created_at'"
            )


def _validate_ci_builds(record: Mapping[str, Any], index: int) -> None:
    _require(record, index, "build_id")
    _count(record, index, "passed_tests")
    _count(record, index, "total_tests")
    _timestamp(record, index, "finished_at")


def _validate_vcs_log(record: Mapping[str, Any], index: int) -> None:
    for field in ("revision", "author"):
        _require(record, index, field)
    _timestamp(record, index, "timestamp")
    _count(record, index, "files_changed")


def _validate_backlog(record: Mapping[str, Any], index: int) -> None:
    for field in ("id", "subject", "type", "status"):
        _require(record, index, field)


_VALIDATORS = {
    SourceKind.STATIC_ANALYSIS: _validate_static_analysis,
    SourceKind.ISSUE_TRACKER: _validate_issue_tracker,
    SourceKind.CI_BUILDS: _validate_ci_builds,
    SourceKind.VCS_LOG: _validate_vcs_log,
    SourceKind.BACKLOG: _validate_backlog,
}


def compute_metric_values(model: QualityModel,
                          snapshots: Iterable[SourceSnapshot]) -> dict[str, float]:
    """Apply every metric's evaluator to its source snapshot.

    With several snapshots for one source id, the most recently captured wins.
    """
    latest: dict[str, SourceSnapshot] = {}
    for snapshot in snapshots:
        current = latest.get(snapshot.source_id)
        if current is None or snapshot.captured_at >= current.captured_at:
            latest[snapshot.source_id] = snapshot

    values: dict[str, float] = {}
    for metric in model.metrics:
        snapshot = latest.get(metric.data_source_id)
        if snapshot is None:
            raise SourceMissing(
                f"metric {metric.id!r} needs source {metric.data_source_id!r}, "
                "but no snapshot for it was provided"
            )
        try:
            values[metric.id] = evaluate_metric(metric.evaluator, list(snapshot.records))
        except FieldMissing as exc:
            raise FieldMissing(f"metric {metric.id!r}: {exc}") from exc
    return values
