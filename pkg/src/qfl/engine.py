"""Workspace wiring: configuration discovery and the assessment loop.

A workspace is a directory holding the model, catalogue, thresholds, staged
snapshots (inbox), the store, and the backlog mock file. The engine loads all
of it and exposes the operations the CLI and the HTTP service both dispatch
to, so their outputs stay schema-identical.
"""

from __future__ import annotations

import json
import os
import shutil
from dataclasses import dataclass
from datetime import datetime
from importlib import resources
from pathlib import Path
from typing import Any, Mapping

from .alerting import Alert, AlertManager, Threshold, load_thresholds
from .analytics import (
    DEFAULT_ALPHA,
    DEFAULT_HORIZON,
    ForecastMethod,
    ForecastResult,
    linear_trend_forecast,
    ses_forecast,
)
from .backlog import make_backlog_client
from .catalogue import Catalogue, load_catalogue
from .errors import ConfigError, UnknownElement
from .ingestion import SourceKind, SourceSnapshot, compute_metric_values, parse_snapshot
from .model import AssessmentPoint, Layer, Provenance, QualityModel, load_model, what_if
from .model import evaluate_snapshot
from .store import Store
from .timeutil import utcnow
from .workflow import WorkflowEngine, qfl_rollup

CONFIG_ENV_VAR = "QFL_CONFIG"
BACKLOG_TOKEN_ENV_VAR = "QFL_BACKLOG_TOKEN"
DEFAULT_CONFIG_NAME = "qfl.config"


@dataclass(frozen=True)
class Config:
    base_dir: Path
    model_path: Path
    catalogue_path: Path
    thresholds_path: Path
    store_dir: Path
    inbox_dir: Path
    backlog_url: str

    @staticmethod
    def load(path: str | Path) -> "Config":
        config_path = Path(path)
        if not config_path.is_file():
            raise ConfigError(f"config file {config_path} does not exist")
        try:
            doc = json.loads(config_path.read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config file {config_path} is not valid JSON: {exc}") from exc
        base = config_path.resolve().parent

        def resolve(key: str, default: str) -> Path:
            return (base / str(doc.get(key, default))).resolve()

        return Config(
            base_dir=base,
            model_path=resolve("model", "config/model.json"),
            catalogue_path=resolve("catalogue", "config/catalogue.json"),
            thresholds_path=resolve("thresholds", "config/thresholds.json"),
            store_dir=resolve("store_dir", "data/store"),
            inbox_dir=resolve("inbox_dir", "data/inbox"),
            backlog_url=_resolve_backlog_url(str(doc.get("backlog_url", "file:data/backlog.ndjson")), base),
        )


def _resolve_backlog_url(url: str, base: Path) -> str:
    if url.startswith("file:"):
        return "file:" + str((base / url[len("file:"):]).resolve())
    return url


def discover_config(explicit: str | None = None) -> Path:
    """Config precedence: --config flag, QFL_CONFIG env var, ./qfl.config."""
    if explicit:
        return Path(explicit)
    env = os.environ.get(CONFIG_ENV_VAR)
    if env:
        return Path(env)
    return Path.cwd() / DEFAULT_CONFIG_NAME


def init_workspace(directory: str | Path, *, backlog_url: str | None = None) -> Path:
    """Scaffold a workspace with the bundled example configuration."""
    base = Path(directory)
    (base / "config").mkdir(parents=True, exist_ok=True)
    (base / "snapshots").mkdir(exist_ok=True)
    (base / "data").mkdir(exist_ok=True)
    data_root = resources.files("qfl") / "data"
    for name in ("model.json", "catalogue.json", "thresholds.json"):
        shutil.copyfile(str(data_root / name), base / "config" / name)
    for entry in (data_root / "snapshots").iterdir():
        shutil.copyfile(str(entry), base / "snapshots" / entry.name)
    config_path = base / DEFAULT_CONFIG_NAME
    config_path.write_text(
        json.dumps(
            {
                "model": "config/model.json",
                "catalogue": "config/catalogue.json",
                "thresholds": "config/thresholds.json",
                "store_dir": "data/store",
                "inbox_dir": "data/inbox",
                "backlog_url": backlog_url or "file:data/backlog.ndjson",
            },
            indent=2,
        )
        + "\n",
        encoding="utf-8",
    )
    return config_path


class QflEngine:
    """Everything behind the CLI and the HTTP service."""

    def __init__(self, config: Config) -> None:
        self.config = config
        if not config.model_path.is_file():
            raise ConfigError(f"model file {config.model_path} does not exist")
        self.model: QualityModel = load_model(config.model_path.read_text(encoding="utf-8"))
        if not config.catalogue_path.is_file():
            raise ConfigError(f"catalogue file {config.catalogue_path} does not exist")
        self.catalogue: Catalogue = load_catalogue(
            config.catalogue_path.read_text(encoding="utf-8"), self.model
        )
        if not config.thresholds_path.is_file():
            raise ConfigError(f"thresholds file {config.thresholds_path} does not exist")
        self.thresholds: list[Threshold] = load_thresholds(
            config.thresholds_path.read_text(encoding="utf-8")
        )
        self.store = Store(config.store_dir)
        self.backlog = make_backlog_client(
            config.backlog_url, token=os.environ.get(BACKLOG_TOKEN_ENV_VAR)
        )
        self.alerts = AlertManager(self.store)
        self.workflow = WorkflowEngine(self.store, self.backlog, self.catalogue, self.model)

    def close(self) -> None:
        self.store.close()
        if hasattr(self.backlog, "close"):
            self.backlog.close()

    # --- ingestion ------------------------------------------------------------

    def ingest(self, source_kind: SourceKind | str, path: str | Path) -> SourceSnapshot:
        """Validate a snapshot document and stage it for the next assessment."""
        document = Path(path).read_text(encoding="utf-8")
        snapshot = parse_snapshot(document, source_kind)
        self.config.inbox_dir.mkdir(parents=True, exist_ok=True)
        staged = self.config.inbox_dir / f"{snapshot.source_id}.json"
        staged.write_text(snapshot.to_json() + "\n", encoding="utf-8")
        return snapshot

    def staged_snapshots(self) -> list[SourceSnapshot]:
        if not self.config.inbox_dir.is_dir():
            return []
        snapshots = []
        for path in sorted(self.config.inbox_dir.glob("*.json")):
            snapshots.append(parse_snapshot(path.read_text(encoding="utf-8")))
        return snapshots

    # --- assessment -------------------------------------------------------------

    def assess(self, *, timestamp: datetime | None = None) -> tuple[dict[str, AssessmentPoint], list[Alert]]:
        """Run one assessment over the staged snapshots.

        Computes metric values, rolls them up, appends everything (including
        the loop's own indicator) to the store, and checks thresholds. The
        assessment timestamp defaults to the newest snapshot capture time, so
        re-assessing unchanged data is idempotent.
        """
        snapshots = self.staged_snapshots()
        metric_values = compute_metric_values(self.model, snapshots)
        instant = timestamp or max(s.captured_at for s in snapshots)
        assessment = evaluate_snapshot(self.model, metric_values, timestamp=instant)
        points = list(assessment.values())
        points.extend(self._qfl_points(instant))
        self.store.append_assessment(points)
        self.alerts.sync_thresholds(self.thresholds)
        new_alerts = self.alerts.run_check(assessment, self.thresholds)
        return assessment, new_alerts

    def _qfl_points(self, instant: datetime) -> list[AssessmentPoint]:
        rollup = qfl_rollup(self.workflow.metrics())
        layer_by_id = {
            "qfl_qr_acceptance": Layer.METRIC,
            "qfl_mitigation_task_completion": Layer.METRIC,
            "qfl_qr_derivation": Layer.METRIC,
            "qfl_relevance": Layer.FACTOR,
            "qfl_completion": Layer.FACTOR,
            "quality_feedback_loop": Layer.INDICATOR,
        }
        return [
            AssessmentPoint(
                element_id=element_id,
                layer=layer_by_id[element_id],
                timestamp=instant,
                value=value,
                provenance=Provenance.OBSERVED,
            )
            for element_id, value in rollup.items()
        ]

    def latest_assessment(self) -> dict[str, AssessmentPoint]:
        return self.store.latest_assessment()

    # --- analysis ------------------------------------------------------------------

    def whatif(self, overrides: Mapping[str, float]) -> dict[str, AssessmentPoint]:
        """What-if over the latest observed metric values."""
        latest = self.store.latest_assessment()
        baseline = {
            m.id: latest[m.id].value for m in self.model.metrics if m.id in latest
        }
        return what_if(self.model, baseline, overrides)

    def forecast(
        self,
        element_id: str,
        method: ForecastMethod | str = ForecastMethod.SES,
        horizon: int = DEFAULT_HORIZON,
        alpha: float = DEFAULT_ALPHA,
    ) -> ForecastResult:
        series = self.store.full_series(element_id)
        wanted = ForecastMethod(method)
        if wanted is ForecastMethod.SES:
            return ses_forecast(series, alpha, horizon)
        return linear_trend_forecast(series, horizon)

    def qfl_summary(self) -> dict[str, Any]:
        """The loop's four health ratios plus their indicator rollup."""
        metrics = self.workflow.metrics()
        return {"metrics": metrics.to_jsonable(), "rollup": qfl_rollup(metrics)}

    def sync_backlog(self) -> list[Any]:
        """Pull the backlog mirror and refresh derived-task completion."""
        packages = self.backlog.fetch_all()
        records = [
            {
                "id": wp.wp_id,
                "subject": wp.subject,
                "type": wp.type_name,
                "status": wp.status,
                **({"parent_id": wp.parent_id} if wp.parent_id else {}),
            }
            for wp in packages
        ]
        snapshot = SourceSnapshot(
            source_id="backlog-sync",
            source_kind=SourceKind.BACKLOG,
            captured_at=utcnow(),
            records=tuple(records),
        )
        return self.workflow.sync_completion(snapshot)

    def element_check(self, element_id: str) -> None:
        """Raise UnknownElement unless the id is a model or loop element."""
        known = set(self.model.element_ids()) | set(self.store.element_ids())
        if element_id not in known:
            raise UnknownElement(f"element {element_id!r} unknown")
