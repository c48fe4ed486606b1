"""Threshold alerting over fresh assessments.

An alert is raised when an element's value drops strictly below a threshold's
trigger. While an alert for a (element, threshold) pair is still unresolved,
re-checking the same breach raises nothing (dedup); once the value recovers to
the trigger or above, the open alert is auto-resolved. Values exactly at the
trigger satisfy the goal and never alert.

check_thresholds is pure given the open-alert set; AlertManager adds the
persistence and lifecycle plumbing on top of the store.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, replace
from datetime import datetime
from enum import Enum
from typing import Any, Iterable, Mapping

from .errors import (
    IllegalTransition,
    SchemaError,
    UnknownAlert,
    UnknownElement,
)
from .model import AssessmentPoint
from .store import DecisionEvent, EventKind, Store
from .timeutil import format_rfc3339, parse_rfc3339, utcnow


class Severity(str, Enum):
    WARNING = "warning"
    CRITICAL = "critical"


class AlertState(str, Enum):
    OPEN = "open"
    ACKNOWLEDGED = "acknowledged"
    RESOLVED = "resolved"


@dataclass(frozen=True)
class Threshold:
    element_id: str
    trigger_below: float
    severity: Severity = Severity.WARNING
    enabled: bool = True

    def __post_init__(self) -> None:
        if not 0.0 <= self.trigger_below <= 1.0:
            raise SchemaError(
                f"trigger_below {self.trigger_below} for {self.element_id!r} outside [0, 1]"
            )

    @property
    def key(self) -> tuple[str, float, str]:
        return (self.element_id, self.trigger_below, self.severity.value)

    def to_jsonable(self) -> dict[str, Any]:
        return {
            "element_id": self.element_id,
            "trigger_below": self.trigger_below,
            "severity": self.severity.value,
            "enabled": self.enabled,
        }


@dataclass(frozen=True)
class Alert:
    alert_id: str
    element_id: str
    observed_value: float
    trigger_below: float
    severity: Severity
    raised_at: datetime
    state: AlertState = AlertState.OPEN

    @property
    def threshold_key(self) -> tuple[str, float, str]:
        return (self.element_id, self.trigger_below, self.severity.value)

    def to_jsonable(self) -> dict[str, Any]:
        return {
            "alert_id": self.alert_id,
            "element_id": self.element_id,
            "observed_value": self.observed_value,
            "trigger_below": self.trigger_below,
            "severity": self.severity.value,
            "raised_at": format_rfc3339(self.raised_at),
            "state": self.state.value,
        }

    @staticmethod
    def from_jsonable(doc: Mapping[str, Any]) -> "Alert":
        return Alert(
            alert_id=str(doc["alert_id"]),
            element_id=str(doc["element_id"]),
            observed_value=float(doc["observed_value"]),
            trigger_below=float(doc["trigger_below"]),
            severity=Severity(doc["severity"]),
            raised_at=parse_rfc3339(doc["raised_at"]),
            state=AlertState(doc["state"]),
        )


def load_thresholds(document: str | bytes | list[Any]) -> list[Threshold]:
    """Parse the thresholds document: a JSON list of threshold objects."""
    if isinstance(document, (str, bytes)):
        try:
            doc = json.loads(document)
        except json.JSONDecodeError as exc:
            raise SchemaError(f"thresholds document is not valid JSON: {exc}") from exc
    else:
        doc = document
    if not isinstance(doc, list):
        raise SchemaError("thresholds document must be a JSON list")
    thresholds = []
    for index, raw in enumerate(doc):
        if not isinstance(raw, Mapping):
            raise SchemaError(f"thresholds[{index}] must be an object")
        for key in ("element_id", "trigger_below"):
            if key not in raw:
                raise SchemaError(f"thresholds[{index}] missing key {key!r}")
        try:
            severity = Severity(raw.get("severity", "warning"))
        except ValueError:
            raise SchemaError(
                f"thresholds[{index}] has unknown severity {raw.get('severity')!r}"
            ) from None
        thresholds.append(
            Threshold(
                element_id=str(raw["element_id"]),
                trigger_below=float(raw["trigger_below"]),
                severity=severity,
                enabled=bool(raw.get("enabled", True)),
            )
        )
    return thresholds


def _alert_id(threshold: Threshold, raised_at: datetime) -> str:
    return (
        f"{threshold.element_id}:{threshold.trigger_below:g}:"
        f"{threshold.severity.value}:{format_rfc3339(raised_at)}"
    )


def check_thresholds(
    assessment: Mapping[str, AssessmentPoint],
    thresholds: Iterable[Threshold],
    open_alerts: Iterable[Alert] = (),
) -> tuple[list[Alert], list[Alert]]:
    """Evaluate thresholds against one assessment.

    Returns (new_alerts, auto_resolved). Pure: the caller owns persistence.
    open_alerts are the currently unresolved alerts (open or acknowledged).
    """
    active: dict[tuple[str, float, str], Alert] = {}
    for alert in open_alerts:
        if alert.state is not AlertState.RESOLVED:
            active[alert.threshold_key] = alert

    new_alerts: list[Alert] = []
    resolved: list[Alert] = []
    for threshold in thresholds:
        if not threshold.enabled:
            continue
        point = assessment.get(threshold.element_id)
        if point is None:
            raise UnknownElement(
                f"threshold references {threshold.element_id!r}, which has no assessment"
            )
        breached = point.value < threshold.trigger_below
        existing = active.get(threshold.key)
        if breached and existing is None:
            new_alerts.append(
                Alert(
                    alert_id=_alert_id(threshold, point.timestamp),
                    element_id=threshold.element_id,
                    observed_value=point.value,
                    trigger_below=threshold.trigger_below,
                    severity=threshold.severity,
                    raised_at=point.timestamp,
                    state=AlertState.OPEN,
                )
            )
        elif not breached and existing is not None:
            resolved.append(replace(existing, state=AlertState.RESOLVED))
    return new_alerts, resolved


_DOC_KIND = "alert"


class AlertManager:
    """Persistent alert book over the store."""

    def __init__(self, store: Store) -> None:
        self._store = store

    def alerts(self, state: AlertState | str | None = None) -> list[Alert]:
        wanted = AlertState(state) if state is not None else None
        alerts = [
            Alert.from_jsonable(doc) for doc in self._store.docs(_DOC_KIND).values()
        ]
        if wanted is not None:
            alerts = [a for a in alerts if a.state is wanted]
        return sorted(alerts, key=lambda a: (a.raised_at, a.alert_id))

    def get(self, alert_id: str) -> Alert:
        doc = self._store.get_doc(_DOC_KIND, alert_id)
        if doc is None:
            raise UnknownAlert(f"no alert {alert_id!r}")
        return Alert.from_jsonable(doc)

    def unresolved(self) -> list[Alert]:
        return [a for a in self.alerts() if a.state is not AlertState.RESOLVED]

    def run_check(
        self,
        assessment: Mapping[str, AssessmentPoint],
        thresholds: Iterable[Threshold],
    ) -> list[Alert]:
        """Check thresholds, persist raise/auto-resolve outcomes, return new alerts."""
        new_alerts, resolved = check_thresholds(assessment, thresholds, self.unresolved())
        for alert in (*new_alerts, *resolved):
            self._store.put_doc(_DOC_KIND, alert.alert_id, alert.to_jsonable())
        return new_alerts

    def acknowledge(self, alert_id: str) -> Alert:
        alert = self.get(alert_id)
        if alert.state is not AlertState.OPEN:
            raise IllegalTransition(
                f"cannot acknowledge alert in state {alert.state.value!r}"
            )
        updated = replace(alert, state=AlertState.ACKNOWLEDGED)
        self._store.put_doc(_DOC_KIND, alert_id, updated.to_jsonable())
        return updated

    def resolve(self, alert_id: str) -> Alert:
        alert = self.get(alert_id)
        if alert.state is AlertState.RESOLVED:
            raise IllegalTransition("alert is already resolved")
        updated = replace(alert, state=AlertState.RESOLVED)
        self._store.put_doc(_DOC_KIND, alert_id, updated.to_jsonable())
        return updated

    def sync_thresholds(self, thresholds: Iterable[Threshold]) -> list[DecisionEvent]:
        """Record threshold_changed events for edits since the last sync."""
        current = {t.key: t.to_jsonable() for t in thresholds}
        previous_doc = self._store.get_doc("threshold_state", "current") or {"thresholds": {}}
        previous = {tuple(json.loads(k)): v for k, v in previous_doc["thresholds"].items()}
        events: list[DecisionEvent] = []
        changed_keys = set(current) ^ set(previous)
        changed_keys |= {k for k in set(current) & set(previous) if current[k] != previous[k]}
        now = utcnow()
        for key in sorted(changed_keys):
            element_id = key[0]
            events.append(
                DecisionEvent(
                    event_id=f"threshold:{key[0]}:{key[1]:g}:{key[2]}:{format_rfc3339(now)}",
                    kind=EventKind.THRESHOLD_CHANGED,
                    subject_id=element_id,
                    timestamp=now,
                )
            )
        for event in events:
            self._store.record_event(event)
        if changed_keys:
            self._store.put_doc(
                "threshold_state",
                "current",
                {"thresholds": {json.dumps(list(k)): v for k, v in current.items()}},
            )
        return events
