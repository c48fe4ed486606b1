"""HTTP API over the engine: assessments, alerts, the QR workflow, what-if and
forecasts.

A thin adapter: every endpoint serializes the corresponding module operation's
result through serialize.py and adds nothing else. Domain errors surface as
ApiError bodies {status, code, message, details} where code is the raising
error class name. Mutating QR/alert endpoints require an Idempotency-Key
header; replaying a key returns the original outcome. A shared secret can be
enforced by setting QFL_API_SECRET (clients then send X-QFL-Secret).
"""

from __future__ import annotations

import os
import threading
from typing import Any

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse

from . import serialize
from .analytics import DEFAULT_ALPHA, DEFAULT_HORIZON
from .engine import Config, QflEngine
from .errors import (
    BacklogUnavailable,
    ConflictError,
    QflError,
    RemoteError,
    StorageFailure,
    UnknownAlert,
    UnknownElement,
    UnknownRequirement,
    UnknownWorkPackage,
)
from .timeutil import parse_rfc3339

API_SECRET_ENV_VAR = "QFL_API_SECRET"
SECRET_HEADER = "x-qfl-secret"
IDEMPOTENCY_HEADER = "idempotency-key"

DEFAULT_PAGE_LIMIT = 100

_STATUS_BY_ERROR: list[tuple[type, int]] = [
    (UnknownElement, 404),
    (UnknownAlert, 404),
    (UnknownRequirement, 404),
    (UnknownWorkPackage, 404),
    (ConflictError, 409),
    (BacklogUnavailable, 503),
    (RemoteError, 502),
    (StorageFailure, 500),
]


def _status_for(error: QflError) -> int:
    for cls, status in _STATUS_BY_ERROR:
        if isinstance(error, cls):
            return status
    return 422


def _error_response(status: int, code: str, message: str,
                    details: dict[str, Any] | None = None) -> JSONResponse:
    return JSONResponse(
        status_code=status,
        content={
            "status": status,
            "code": code,
            "message": message,
            "details": details or {},
        },
    )


def _paginate(items: list[Any], limit: int, offset: int) -> list[Any]:
    return items[offset : offset + limit]


def create_app(engine: QflEngine) -> FastAPI:
    app = FastAPI(title="qfl", version="0.1.0")
    secret = os.environ.get(API_SECRET_ENV_VAR)
    replay_lock = threading.Lock()
    replayed: dict[str, tuple[int, Any]] = {}

    @app.middleware("http")
    async def check_secret(request: Request, call_next):  # type: ignore[no-untyped-def]
        if secret and request.headers.get(SECRET_HEADER) != secret:
            return _error_response(401, "Unauthorized", "missing or wrong shared secret")
        return await call_next(request)

    @app.exception_handler(QflError)
    async def handle_domain_error(request: Request, error: QflError):  # type: ignore[no-untyped-def]
        return _error_response(_status_for(error), error.code, str(error))

    def idempotent(request: Request, compute):  # type: ignore[no-untyped-def]
        key = request.headers.get(IDEMPOTENCY_HEADER)
        if not key:
            return _error_response(
                422,
                "MissingIdempotencyKey",
                f"decision endpoints require an {IDEMPOTENCY_HEADER} header",
            )
        with replay_lock:
            if key in replayed:
                status, body = replayed[key]
                return JSONResponse(status_code=status, content=body)
            body = compute()
            replayed[key] = (200, body)
            return JSONResponse(status_code=200, content=body)

    # --- read endpoints ------------------------------------------------------

    @app.get("/model")
    def get_model() -> Any:
        return serialize.model_body(engine.model)

    @app.get("/assessment/latest")
    def get_latest() -> Any:
        return serialize.assessment_body(engine.latest_assessment())

    @app.get("/history/{element_id}")
    def history(element_id: str, request: Request) -> Any:
        # "from" is a reserved word, so both bounds come via raw query params.
        params = request.query_params
        series = engine.store.full_series(element_id)
        from_text = params.get("from")
        to_text = params.get("to")
        if (from_text or to_text) and series.points:
            from_ts = parse_rfc3339(from_text) if from_text else series.points[0].timestamp
            to_ts = parse_rfc3339(to_text) if to_text else series.points[-1].timestamp
            series = engine.store.query_range(element_id, from_ts, to_ts)
        return serialize.history_body(series)

    @app.get("/events")
    def events(subject: str | None = None, limit: int = DEFAULT_PAGE_LIMIT, offset: int = 0) -> Any:
        found = engine.store.list_events(subject_id=subject)
        return serialize.events_body(_paginate(found, limit, offset))

    @app.get("/alerts")
    def alerts(state: str | None = None, limit: int = DEFAULT_PAGE_LIMIT, offset: int = 0) -> Any:
        found = engine.alerts.alerts(state)
        return serialize.alerts_body(_paginate(found, limit, offset))

    @app.get("/qrs")
    def qrs(state: str | None = None, limit: int = DEFAULT_PAGE_LIMIT, offset: int = 0) -> Any:
        found = engine.workflow.qrs(state)
        return serialize.qrs_body(_paginate(found, limit, offset))

    @app.get("/forecast")
    def forecast(element: str, method: str = "ses", horizon: int = DEFAULT_HORIZON,
                 alpha: float = DEFAULT_ALPHA) -> Any:
        method_name = {"trend": "linear_trend"}.get(method, method)
        return serialize.forecast_body(
            engine.forecast(element, method_name, horizon, alpha)
        )

    @app.get("/qfl")
    def qfl_panel() -> Any:
        return serialize.qfl_body(engine.workflow.metrics())

    # --- mutations ---------------------------------------------------------------

    @app.post("/alerts/{alert_id}/ack")
    def ack_alert(alert_id: str) -> Any:
        return serialize.alert_body(engine.alerts.acknowledge(alert_id))

    @app.post("/alerts/{alert_id}/suggest")
    def suggest(alert_id: str, body: dict[str, Any], request: Request) -> Any:
        def compute() -> Any:
            alert = engine.alerts.get(alert_id)
            qr = engine.workflow.suggest_qr(
                alert, str(body.get("pattern", "")), body.get("params", {})
            )
            return serialize.qr_body(qr)

        return idempotent(request, compute)

    @app.post("/qrs/{qr_id}/decision")
    def decide(qr_id: str, body: dict[str, Any], request: Request) -> Any:
        def compute() -> Any:
            stage = str(body.get("stage", ""))
            decision = str(body.get("decision", ""))
            rationale = str(body.get("rationale", "") or "")
            if stage == "qe":
                qr = engine.workflow.qe_decide(qr_id, decision, rationale)
            elif stage == "pm":
                qr = engine.workflow.pm_decide(qr_id, decision, rationale)
            else:
                raise ValueError(f"unknown stage {stage!r} (expected qe or pm)")
            return serialize.qr_body(qr)

        return idempotent(request, compute)

    @app.post("/qrs/{qr_id}/export")
    def export(qr_id: str, request: Request) -> Any:
        return idempotent(
            request, lambda: serialize.qr_body(engine.workflow.export_qr(qr_id))
        )

    @app.post("/qrs/{qr_id}/derive")
    def derive(qr_id: str, body: dict[str, Any], request: Request) -> Any:
        def compute() -> Any:
            task_id = engine.workflow.derive_task(qr_id, str(body.get("subject", "")))
            qr = engine.workflow.get(qr_id)
            doc = serialize.qr_body(qr)
            doc["new_task_id"] = task_id
            return doc

        return idempotent(request, compute)

    @app.post("/sync")
    def sync() -> Any:
        return serialize.qrs_body(engine.sync_backlog())

    @app.post("/whatif")
    def whatif(body: dict[str, Any]) -> Any:
        overrides = body.get("overrides", {})
        if not isinstance(overrides, dict):
            raise ValueError("overrides must be an object of element_id -> value")
        return serialize.assessment_body(
            engine.whatif({str(k): float(v) for k, v in overrides.items()})
        )

    @app.exception_handler(ValueError)
    async def handle_value_error(request: Request, error: ValueError):  # type: ignore[no-untyped-def]
        return _error_response(422, "ValueError", str(error))

    return app


def serve(config: Config, *, host: str = "127.0.0.1", port: int = 8765,
          ui_dir: str | None = None) -> None:
    """Run the service until interrupted; uvicorn handles signals."""
    import uvicorn

    engine = QflEngine(config)
    app = create_app(engine)
    if ui_dir:
        from fastapi.staticfiles import StaticFiles

        app.mount("/ui", StaticFiles(directory=ui_dir, html=True), name="ui")
    try:
        uvicorn.run(app, host=host, port=port, log_level="info")
    finally:
        engine.close()
