#!/usr/bin/env python3
"""Capture real service responses as frontend test fixtures.

Seeds a workspace, drives the documented scenarios through the HTTP service,
and records the exact response bodies the dashboard will render. Re-run after
any wire-format change:

    python3 scripts/capture_fixtures.py
"""

from __future__ import annotations

import json
import sys
import tempfile
from datetime import datetime, timedelta, timezone
from pathlib import Path

from fastapi.testclient import TestClient

from qfl.engine import Config, QflEngine, init_workspace
from qfl.model import AssessmentPoint, Layer, Provenance
from qfl.service import create_app
from qfl.store import DecisionEvent, EventKind

FIXTURES = Path(__file__).resolve().parent.parent / "tests" / "fixtures"

SNAPSHOT_KINDS = {
    "sonarqube": "static_analysis",
    "mantis": "issue_tracker",
    "jenkins": "ci_builds",
    "modelio_testing": "ci_builds",
    "svn": "vcs_log",
    "openproject": "backlog",
}


def save(name: str, body: object) -> None:
    FIXTURES.mkdir(parents=True, exist_ok=True)
    (FIXTURES / name).write_text(json.dumps(body, indent=2) + "\n", encoding="utf-8")
    print(f"wrote {name}")


def seed_step_series(engine: QflEngine) -> None:
    """The 0.75 -> qr_added -> 0.95 replay series used by the history chart."""
    t0 = datetime(2019, 6, 21, tzinfo=timezone.utc)
    for n in range(5):
        engine.store.append_assessment(
            [
                AssessmentPoint(
                    element_id="passed_tests_percentage",
                    layer=Layer.METRIC,
                    timestamp=t0 + timedelta(days=n),
                    value=0.75,
                    provenance=Provenance.OBSERVED,
                )
            ]
        )
    engine.store.record_event(
        DecisionEvent(
            event_id="qr-passed-tests:evt:1",
            kind=EventKind.QR_ADDED,
            subject_id="qr-passed-tests",
            timestamp=t0 + timedelta(days=4),
        )
    )
    for n in range(5, 10):
        engine.store.append_assessment(
            [
                AssessmentPoint(
                    element_id="passed_tests_percentage",
                    layer=Layer.METRIC,
                    timestamp=t0 + timedelta(days=n),
                    value=0.95,
                    provenance=Provenance.OBSERVED,
                )
            ]
        )


def main() -> int:
    with tempfile.TemporaryDirectory() as tmp:
        workspace = Path(tmp)
        config_path = init_workspace(workspace)
        engine = QflEngine(Config.load(config_path))
        for name, kind in SNAPSHOT_KINDS.items():
            engine.ingest(kind, workspace / "snapshots" / f"{name}.json")
        engine.assess()
        seed_step_series(engine)

        with TestClient(create_app(engine)) as client:
            save("model.json", client.get("/model").json())
            save("assessment_latest.json", client.get("/assessment/latest").json())
            save("alerts_open.json", client.get("/alerts?state=open").json())

            alerts = client.get("/alerts?state=open").json()
            complexity_alert = next(a for a in alerts if a["element_id"] == "complexity")
            suggested = client.post(
                f"/alerts/{complexity_alert['alert_id']}/suggest",
                json={"pattern": "Complex files", "params": {"value": 95}},
                headers={"Idempotency-Key": "fixture-suggest"},
            ).json()
            save("qrs_suggested.json", client.get("/qrs").json())
            save("qfl_before.json", client.get("/qfl").json())

            qr_id = suggested["qr_id"]
            client.post(
                f"/qrs/{qr_id}/decision",
                json={"stage": "qe", "decision": "accept"},
                headers={"Idempotency-Key": "fixture-qe"},
            )
            client.post(f"/qrs/{qr_id}/export", headers={"Idempotency-Key": "fixture-export"})
            client.post(
                f"/qrs/{qr_id}/decision",
                json={"stage": "pm", "decision": "accept"},
                headers={"Idempotency-Key": "fixture-pm"},
            )
            client.post(
                f"/qrs/{qr_id}/derive",
                json={"subject": "Break up the three over-complex files"},
                headers={"Idempotency-Key": "fixture-derive"},
            )
            save("qrs_after_derive.json", client.get("/qrs").json())
            save("qfl_after_derive.json", client.get("/qfl").json())

            save(
                "history_step.json",
                client.get("/history/passed_tests_percentage").json(),
            )
            save(
                "events_step.json",
                client.get("/events?subject=qr-passed-tests").json(),
            )

            whatif = client.post("/whatif", json={"overrides": {"complexity": 0.95}}).json()
            save("whatif_complexity_95.json", whatif)
        engine.close()
    return 0


if __name__ == "__main__":
    sys.exit(main())
