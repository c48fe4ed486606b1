"""Canonical JSON-able bodies for every resource.

The HTTP service and the CLI's --format json output both go through these
functions, which keeps the two surfaces schema-identical: the service layer
adds no business logic of its own, it serializes module results.
"""

from __future__ import annotations

from typing import Any, Iterable, Mapping

from .alerting import Alert
from .analytics import ForecastResult
from .model import AssessmentPoint, QualityModel
from .store import DecisionEvent, HistorySeries
from .workflow import QflMetrics, QualityRequirement, qfl_rollup


def model_body(model: QualityModel) -> dict[str, Any]:
    return model.to_jsonable()


def assessment_body(points: Mapping[str, AssessmentPoint]) -> list[dict[str, Any]]:
    return [points[element_id].to_jsonable() for element_id in sorted(points)]


def history_body(series: HistorySeries) -> dict[str, Any]:
    return series.to_jsonable()


def events_body(events: Iterable[DecisionEvent]) -> list[dict[str, Any]]:
    return [event.to_jsonable() for event in events]


def alerts_body(alerts: Iterable[Alert]) -> list[dict[str, Any]]:
    return [alert.to_jsonable() for alert in alerts]


def alert_body(alert: Alert) -> dict[str, Any]:
    return alert.to_jsonable()


def qrs_body(qrs: Iterable[QualityRequirement]) -> list[dict[str, Any]]:
    return [qr.to_jsonable() for qr in qrs]


def qr_body(qr: QualityRequirement) -> dict[str, Any]:
    return qr.to_jsonable()


def forecast_body(result: ForecastResult) -> dict[str, Any]:
    return result.to_jsonable()


def qfl_body(metrics: QflMetrics) -> dict[str, Any]:
    return {"metrics": metrics.to_jsonable(), "rollup": qfl_rollup(metrics)}
