"""Quality requirement life-cycle: suggestion, two-stage decisions, export to
the backlog, task derivation, and completion tracking.

State machine:

    Suggested -> RejectedByQE | AcceptedByQE
    AcceptedByQE -> Exported
    Exported -> RejectedByPM | Postponed | AcceptedByPM
    Postponed -> AcceptedByPM | RejectedByPM
    AcceptedByPM -> Derived
    Derived -> Completed          (once every derived task is closed)

RejectedByQE, RejectedByPM and Completed are terminal. Rejections always carry
a rationale. Export and derivation write through the backlog client with the
QR id as idempotency key, so retries never duplicate work packages.

The loop's own health is measured by four ratios (acceptance by QE and PM,
derivation of accepted QRs into tasks, completion of those tasks) which roll
up into the Quality Feedback Loop indicator.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace
from datetime import datetime
from enum import Enum
from typing import Any, Iterable, Mapping

from . import catalogue as catalogue_mod
from .alerting import Alert
from .backlog import (
    TYPE_QUALITY_REQUIREMENT,
    TYPE_TASK,
    WorkPackageRequest,
)
from .catalogue import Catalogue, QRPattern
from .errors import (
    IllegalTransition,
    MissingRationale,
    PatternNotApplicable,
    UnknownRequirement,
)
from .ingestion import SourceSnapshot, SourceKind
from .model import QualityModel, aggregate
from .store import DecisionEvent, EventKind, Store
from .timeutil import format_rfc3339, parse_rfc3339, utcnow

logger = logging.getLogger(__name__)

DEFAULT_TASK_CLOSED_STATUSES = ("Closed",)
DEFAULT_NEUTRAL_RATIO = 1.0


class QRState(str, Enum):
    SUGGESTED = "Suggested"
    REJECTED_BY_QE = "RejectedByQE"
    ACCEPTED_BY_QE = "AcceptedByQE"
    EXPORTED = "Exported"
    REJECTED_BY_PM = "RejectedByPM"
    POSTPONED = "Postponed"
    ACCEPTED_BY_PM = "AcceptedByPM"
    DERIVED = "Derived"
    COMPLETED = "Completed"


TRANSITIONS: dict[QRState, frozenset[QRState]] = {
    QRState.SUGGESTED: frozenset({QRState.REJECTED_BY_QE, QRState.ACCEPTED_BY_QE}),
    QRState.ACCEPTED_BY_QE: frozenset({QRState.EXPORTED}),
    QRState.EXPORTED: frozenset(
        {QRState.REJECTED_BY_PM, QRState.POSTPONED, QRState.ACCEPTED_BY_PM}
    ),
    QRState.POSTPONED: frozenset({QRState.ACCEPTED_BY_PM, QRState.REJECTED_BY_PM}),
    QRState.ACCEPTED_BY_PM: frozenset({QRState.DERIVED}),
    QRState.DERIVED: frozenset({QRState.COMPLETED}),
    QRState.REJECTED_BY_QE: frozenset(),
    QRState.REJECTED_BY_PM: frozenset(),
    QRState.COMPLETED: frozenset(),
}

TERMINAL_STATES = frozenset(
    {QRState.REJECTED_BY_QE, QRState.REJECTED_BY_PM, QRState.COMPLETED}
)

# States meaning "the project manager said yes" (and whatever followed).
PM_ACCEPTED_STATES = frozenset(
    {QRState.ACCEPTED_BY_PM, QRState.DERIVED, QRState.COMPLETED}
)
PM_DECIDED_STATES = PM_ACCEPTED_STATES | {QRState.REJECTED_BY_PM}


@dataclass(frozen=True)
class QualityRequirement:
    qr_id: str
    text: str
    created_at: datetime
    pattern_name: str | None = None
    source_alert_id: str | None = None
    linked_metric_ids: tuple[str, ...] = ()
    state: QRState = QRState.SUGGESTED
    decisions: tuple[str, ...] = ()
    backlog_ref: str | None = None
    derived_task_ids: tuple[str, ...] = ()
    task_statuses: Mapping[str, str] = field(default_factory=dict)

    def to_jsonable(self) -> dict[str, Any]:
        return {
            "qr_id": self.qr_id,
            "text": self.text,
            "created_at": format_rfc3339(self.created_at),
            "pattern_name": self.pattern_name,
            "source_alert_id": self.source_alert_id,
            "linked_metric_ids": list(self.linked_metric_ids),
            "state": self.state.value,
            "decisions": list(self.decisions),
            "backlog_ref": self.backlog_ref,
            "derived_task_ids": list(self.derived_task_ids),
            "task_statuses": dict(self.task_statuses),
        }

    @staticmethod
    def from_jsonable(doc: Mapping[str, Any]) -> "QualityRequirement":
        return QualityRequirement(
            qr_id=str(doc["qr_id"]),
            text=str(doc["text"]),
            created_at=parse_rfc3339(doc["created_at"]),
            pattern_name=doc.get("pattern_name"),
            source_alert_id=doc.get("source_alert_id"),
            linked_metric_ids=tuple(doc.get("linked_metric_ids", ())),
            state=QRState(doc["state"]),
            decisions=tuple(doc.get("decisions", ())),
            backlog_ref=doc.get("backlog_ref"),
            derived_task_ids=tuple(doc.get("derived_task_ids", ())),
            task_statuses=dict(doc.get("task_statuses", {})),
        )


@dataclass(frozen=True)
class QflMetrics:
    """The loop's own health ratios, all in [0, 1]."""

    qe_acceptance: float
    pm_acceptance: float
    end_to_end: float
    mitigation_task_completion: float
    qr_derivation: float

    def to_jsonable(self) -> dict[str, float]:
        return {
            "qe_acceptance": self.qe_acceptance,
            "pm_acceptance": self.pm_acceptance,
            "end_to_end": self.end_to_end,
            "mitigation_task_completion": self.mitigation_task_completion,
            "qr_derivation": self.qr_derivation,
        }


def compute_qfl_metrics(
    qrs: Iterable[QualityRequirement],
    *,
    closed_statuses: Iterable[str] = DEFAULT_TASK_CLOSED_STATUSES,
    neutral: float = DEFAULT_NEUTRAL_RATIO,
) -> QflMetrics:
    """Pure function of the QR records.

    Ratios with an empty denominator return the configured neutral value
    (default 1.0: no evidence of a problem). Postponed QRs are not yet
    PM-decided and stay out of the acceptance denominator.
    """
    qr_list = list(qrs)
    closed = set(closed_statuses)

    def ratio(numerator: int, denominator: int) -> float:
        return numerator / denominator if denominator else neutral

    qe_decided = [qr for qr in qr_list if qr.state is not QRState.SUGGESTED]
    qe_accepted = [qr for qr in qe_decided if qr.state is not QRState.REJECTED_BY_QE]

    pm_decided = [qr for qr in qr_list if qr.state in PM_DECIDED_STATES]
    pm_accepted = [qr for qr in qr_list if qr.state in PM_ACCEPTED_STATES]

    all_tasks = [
        status for qr in qr_list for status in qr.task_statuses.values()
    ]
    closed_tasks = [status for status in all_tasks if status in closed]

    derived = [qr for qr in pm_accepted if qr.derived_task_ids]

    return QflMetrics(
        qe_acceptance=ratio(len(qe_accepted), len(qe_decided)),
        pm_acceptance=ratio(len(pm_accepted), len(pm_decided)),
        end_to_end=ratio(len(pm_accepted), len(qr_list)),
        mitigation_task_completion=ratio(len(closed_tasks), len(all_tasks)),
        qr_derivation=ratio(len(derived), len(pm_accepted)),
    )


# Element ids under which the loop's own assessment is stored and charted.
QFL_METRIC_IDS = {
    "qr_acceptance": "qfl_qr_acceptance",
    "mitigation_task_completion": "qfl_mitigation_task_completion",
    "qr_derivation": "qfl_qr_derivation",
}
QFL_RELEVANCE_FACTOR_ID = "qfl_relevance"
QFL_COMPLETION_FACTOR_ID = "qfl_completion"
QFL_INDICATOR_ID = "quality_feedback_loop"


def qfl_rollup(metrics: QflMetrics) -> dict[str, float]:
    """Aggregate the loop metrics into the Quality Feedback Loop indicator.

    Relevance carries the PM acceptance ratio; Completion combines task
    completion and derivation, equal weights throughout.
    """
    relevance = aggregate([(metrics.pm_acceptance, 1.0)])
    completion = aggregate(
        [(metrics.mitigation_task_completion, 1.0), (metrics.qr_derivation, 1.0)]
    )
    indicator = aggregate([(relevance, 1.0), (completion, 1.0)])
    return {
        QFL_METRIC_IDS["qr_acceptance"]: metrics.pm_acceptance,
        QFL_METRIC_IDS["mitigation_task_completion"]: metrics.mitigation_task_completion,
        QFL_METRIC_IDS["qr_derivation"]: metrics.qr_derivation,
        QFL_RELEVANCE_FACTOR_ID: relevance,
        QFL_COMPLETION_FACTOR_ID: completion,
        QFL_INDICATOR_ID: indicator,
    }


_DOC_KIND = "qr"


class WorkflowEngine:
    """Owns QR records and their transitions; persists through the store."""

    def __init__(
        self,
        store: Store,
        backlog_client: Any,
        catalogue: Catalogue,
        model: QualityModel,
        *,
        task_closed_statuses: Iterable[str] = DEFAULT_TASK_CLOSED_STATUSES,
        neutral_ratio: float = DEFAULT_NEUTRAL_RATIO,
    ) -> None:
        self._store = store
        self._backlog = backlog_client
        self._catalogue = catalogue
        self._model = model
        self._closed = tuple(task_closed_statuses)
        self._neutral = neutral_ratio

    # --- queries -----------------------------------------------------------

    def qrs(self, state: QRState | str | None = None) -> list[QualityRequirement]:
        wanted = QRState(state) if state is not None else None
        records = [
            QualityRequirement.from_jsonable(doc)
            for doc in self._store.docs(_DOC_KIND).values()
        ]
        if wanted is not None:
            records = [qr for qr in records if qr.state is wanted]
        return sorted(records, key=lambda qr: (qr.created_at, qr.qr_id))

    def get(self, qr_id: str) -> QualityRequirement:
        doc = self._store.get_doc(_DOC_KIND, qr_id)
        if doc is None:
            raise UnknownRequirement(f"no quality requirement {qr_id!r}")
        return QualityRequirement.from_jsonable(doc)

    def metrics(self) -> QflMetrics:
        return compute_qfl_metrics(
            self.qrs(), closed_statuses=self._closed, neutral=self._neutral
        )

    # --- helpers -------------------------------------------------------------

    def _save(self, qr: QualityRequirement) -> QualityRequirement:
        self._store.put_doc(_DOC_KIND, qr.qr_id, qr.to_jsonable())
        return qr

    def _event(
        self, qr: QualityRequirement, kind: EventKind, rationale: str = ""
    ) -> DecisionEvent:
        event = DecisionEvent(
            event_id=f"{qr.qr_id}:evt:{len(qr.decisions) + 1}",
            kind=kind,
            subject_id=qr.qr_id,
            timestamp=utcnow(),
            rationale=rationale,
        )
        self._store.record_event(event)
        return event

    @staticmethod
    def _require_state(qr: QualityRequirement, allowed: Iterable[QRState], op: str) -> None:
        if qr.state not in tuple(allowed):
            raise IllegalTransition(
                f"{op} not allowed for {qr.qr_id!r} in state {qr.state.value!r}"
            )

    # --- operations -------------------------------------------------------------

    def suggest_qr(
        self,
        alert: Alert,
        pattern: QRPattern | str,
        params: Mapping[str, Any],
    ) -> QualityRequirement:
        """Create a Suggested QR from an alert and an applicable pattern.

        Re-suggesting the same (alert, pattern) pair returns the existing QR;
        a fresh QR for the same breach requires the alert to resolve and
        re-raise (which mints a new alert id).
        """
        if isinstance(pattern, str):
            pattern = self._catalogue.pattern(pattern)
        candidates = catalogue_mod.candidates_for_alert(alert, self._catalogue, self._model)
        if pattern.name not in {c.name for c in candidates}:
            raise PatternNotApplicable(
                f"pattern {pattern.name!r} is not linked to alerted element "
                f"{alert.element_id!r}"
            )
        for existing in self.qrs():
            if (
                existing.source_alert_id == alert.alert_id
                and existing.pattern_name == pattern.name
            ):
                return existing
        text = catalogue_mod.instantiate(pattern, params)
        qr = QualityRequirement(
            qr_id=f"qr-{len(self._store.docs(_DOC_KIND)) + 1:04d}",
            text=text,
            created_at=utcnow(),
            pattern_name=pattern.name,
            source_alert_id=alert.alert_id,
            linked_metric_ids=tuple(pattern.linked_metric_ids),
            state=QRState.SUGGESTED,
        )
        event = self._event(qr, EventKind.QR_ADDED)
        return self._save(replace(qr, decisions=(event.event_id,)))

    def qe_decide(self, qr_id: str, decision: str, rationale: str = "") -> QualityRequirement:
        qr = self.get(qr_id)
        self._require_state(qr, [QRState.SUGGESTED], "quality engineer decision")
        if decision == "accept":
            return self._save(replace(qr, state=QRState.ACCEPTED_BY_QE))
        if decision == "reject":
            if not rationale.strip():
                raise MissingRationale(
                    f"rejecting {qr_id!r} requires a rationale"
                )
            event = self._event(qr, EventKind.QR_REJECTED_QE, rationale)
            return self._save(
                replace(
                    qr,
                    state=QRState.REJECTED_BY_QE,
                    decisions=qr.decisions + (event.event_id,),
                )
            )
        raise ValueError(f"unknown decision {decision!r} (expected accept or reject)")

    def export_qr(self, qr_id: str) -> QualityRequirement:
        """Create the QualityRequirement work package; retry-safe via qr_id key."""
        qr = self.get(qr_id)
        self._require_state(qr, [QRState.ACCEPTED_BY_QE], "export")
        wp = self._backlog.create_work_package(
            WorkPackageRequest(
                subject=qr.text,
                type_name=TYPE_QUALITY_REQUIREMENT,
                description=f"Suggested from alert {qr.source_alert_id or 'n/a'}",
                external_key=qr.qr_id,
            )
        )
        return self._save(replace(qr, state=QRState.EXPORTED, backlog_ref=wp.wp_id))

    def pm_decide(self, qr_id: str, decision: str, rationale: str = "") -> QualityRequirement:
        qr = self.get(qr_id)
        self._require_state(
            qr, [QRState.EXPORTED, QRState.POSTPONED], "project manager decision"
        )
        if decision == "accept":
            return self._save(replace(qr, state=QRState.ACCEPTED_BY_PM))
        if decision == "postpone":
            self._require_state(qr, [QRState.EXPORTED], "postpone")
            event = self._event(qr, EventKind.QR_POSTPONED, rationale)
            return self._save(
                replace(
                    qr,
                    state=QRState.POSTPONED,
                    decisions=qr.decisions + (event.event_id,),
                )
            )
        if decision == "reject":
            if not rationale.strip():
                raise MissingRationale(f"rejecting {qr_id!r} requires a rationale")
            if qr.backlog_ref is not None:
                self._backlog.set_status(qr.backlog_ref, "Rejected")
            event = self._event(qr, EventKind.QR_REJECTED_PM, rationale)
            return self._save(
                replace(
                    qr,
                    state=QRState.REJECTED_BY_PM,
                    decisions=qr.decisions + (event.event_id,),
                )
            )
        raise ValueError(
            f"unknown decision {decision!r} (expected accept, reject or postpone)"
        )

    def derive_task(self, qr_id: str, subject: str) -> str:
        """Create a child Task work package; returns the new task's id."""
        qr = self.get(qr_id)
        self._require_state(qr, [QRState.ACCEPTED_BY_PM, QRState.DERIVED], "derive")
        task = self._backlog.create_work_package(
            WorkPackageRequest(
                subject=subject,
                type_name=TYPE_TASK,
                description=f"Derived from quality requirement {qr.qr_id}",
                parent_id=qr.backlog_ref,
                external_key=f"{qr.qr_id}:task:{len(qr.derived_task_ids) + 1}",
            )
        )
        event = self._event(qr, EventKind.QR_DERIVED)
        statuses = dict(qr.task_statuses)
        statuses[task.wp_id] = task.status
        self._save(
            replace(
                qr,
                state=QRState.DERIVED,
                derived_task_ids=qr.derived_task_ids + (task.wp_id,),
                task_statuses=statuses,
                decisions=qr.decisions + (event.event_id,),
            )
        )
        return task.wp_id

    def sync_completion(self, snapshot: SourceSnapshot) -> list[QualityRequirement]:
        """Refresh task statuses from a backlog snapshot; close finished QRs."""
        if snapshot.source_kind is not SourceKind.BACKLOG:
            raise ValueError("sync_completion needs a backlog snapshot")
        statuses = {str(r["id"]): str(r["status"]) for r in snapshot.records}
        updated: list[QualityRequirement] = []
        for qr in self.qrs():
            if not qr.derived_task_ids:
                continue
            merged = dict(qr.task_statuses)
            for task_id in qr.derived_task_ids:
                if task_id in statuses:
                    merged[task_id] = statuses[task_id]
                else:
                    logger.warning(
                        "task %s of %s missing from backlog snapshot", task_id, qr.qr_id
                    )
            changed = merged != dict(qr.task_statuses)
            next_state = qr.state
            if qr.state is QRState.DERIVED and all(
                merged[task_id] in self._closed for task_id in qr.derived_task_ids
            ):
                next_state = QRState.COMPLETED
            if changed or next_state is not qr.state:
                updated.append(
                    self._save(replace(qr, task_statuses=merged, state=next_state))
                )
        return updated
