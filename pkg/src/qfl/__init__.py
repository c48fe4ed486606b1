"""qfl: a quality feedback loop engine.

Continuously assesses software quality through a configurable 3-layer quality
model, raises threshold alerts, semi-automatically generates quality
requirements from a pattern catalogue, exports accepted requirements to a
backlog service, and monitors their life-cycle through a dedicated indicator.
"""

from .alerting import Alert, AlertManager, AlertState, Severity, Threshold, check_thresholds, load_thresholds
from .analytics import ForecastMethod, ForecastResult, linear_trend_forecast, ses_forecast
from .backlog import (
    FileBacklogClient,
    HttpBacklogClient,
    WorkPackage,
    WorkPackageRequest,
    make_backlog_client,
)
from .catalogue import Catalogue, ParamSpec, QRPattern, candidates_for_alert, instantiate, load_catalogue
from .engine import Config, QflEngine, discover_config, init_workspace
from .ingestion import SourceKind, SourceSnapshot, compute_metric_values, parse_snapshot
from .model import (
    AssessmentPoint,
    EvaluatorKind,
    EvaluatorSpec,
    FactorDef,
    IndicatorDef,
    Layer,
    MetricDef,
    Provenance,
    QualityModel,
    aggregate,
    evaluate_metric,
    evaluate_snapshot,
    load_model,
    what_if,
)
from .store import DecisionEvent, EventKind, HistorySeries, Store
from .workflow import (
    QflMetrics,
    QRState,
    QualityRequirement,
    WorkflowEngine,
    compute_qfl_metrics,
    qfl_rollup,
)

__version__ = "0.1.0"
