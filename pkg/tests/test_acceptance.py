"""Acceptance suite: one test per criterion, each printing a PASS line.

Run with `pytest tests/test_acceptance.py -v -s` to see the per-criterion
lines; the suite is also part of the default pytest run.
"""

from __future__ import annotations

import random
import time
from datetime import datetime, timedelta, timezone

import pytest

from qfl.alerting import Alert, AlertManager, AlertState, Severity, Threshold, check_thresholds
from qfl.analytics import linear_trend_forecast, ses_forecast
from qfl.backlog import FileBacklogClient, HttpBacklogClient, WorkPackageRequest
from qfl.engine import Config, QflEngine, init_workspace
from qfl.errors import IllegalTransition
from qfl.ingestion import compute_metric_values, parse_snapshot
from qfl.model import AssessmentPoint, Layer, Provenance, evaluate_snapshot, what_if
from qfl.store import DecisionEvent, EventKind, HistorySeries, Store
from qfl.workflow import QRState, WorkflowEngine, compute_qfl_metrics

from conftest import SNAPSHOT_KINDS, naive_rollup, random_model
from test_backlog import StubBacklogServer

T0 = datetime(2019, 5, 1, tzinfo=timezone.utc)


def day(n: int) -> datetime:
    return T0 + timedelta(days=n)


def point(element_id: str, n: int, value: float) -> AssessmentPoint:
    return AssessmentPoint(
        element_id=element_id,
        layer=Layer.METRIC,
        timestamp=day(n),
        value=value,
        provenance=Provenance.OBSERVED,
    )


def _report(criterion: str, detail: str) -> None:
    print(f"\nACCEPTANCE {criterion}: PASS ({detail})")


# --- criterion 1: reported-scenario replay ------------------------------------------


def test_criterion_1_scenario_replay(tmp_path, example_model, example_catalogue):
    """7 QRs suggested, QE rejects 1, 6 exported, PM rejects 2 / accepts 4,
    all 4 derived; the three reported ratios come out at 6/7, 4/6, 4/7."""
    store = Store(tmp_path / "store")
    backlog = FileBacklogClient(tmp_path / "backlog.ndjson")
    flow = WorkflowEngine(store, backlog, example_catalogue, example_model)
    manager = AlertManager(store)

    breached = {
        "code_quality": 0.55,
        "comments_ratio": 0.5,
        "bugs_resolved_ratio": 0.6,
        "critical_violations_free": 0.7,
        "passed_tests_percentage": 0.75,
    }
    thresholds = [Threshold(element_id=e, trigger_below=0.8) for e in breached]
    assessment = {
        element_id: AssessmentPoint(
            element_id=element_id,
            layer=example_model.layer_of(element_id),
            timestamp=day(56),
            value=value,
            provenance=Provenance.OBSERVED,
        )
        for element_id, value in breached.items()
    }

    started = time.perf_counter()
    alerts = {a.element_id: a for a in manager.run_check(assessment, thresholds)}
    assert len(alerts) == 5

    factor_alert = alerts["code_quality"]
    suggestions = [
        (factor_alert, "Complex files", {"value": 95}),
        (factor_alert, "Commented files", {"value": 80}),
        (factor_alert, "Duplication-free files", {"value": 90}),
        (alerts["comments_ratio"], "Commented files", {"value": 85}),
        (alerts["bugs_resolved_ratio"], "Open bugs containment", {"value": 5}),
        (alerts["critical_violations_free"], "Violation-free files", {"value": 90}),
        (alerts["passed_tests_percentage"], "Passed tests", {"value": 0.95}),
    ]
    qrs = [flow.suggest_qr(alert, pattern, params) for alert, pattern, params in suggestions]
    assert len({qr.qr_id for qr in qrs}) == 7

    flow.qe_decide(qrs[3].qr_id, "reject", "will be addressed by a coding-rules reminder")
    exported = []
    for qr in qrs[:3] + qrs[4:]:
        flow.qe_decide(qr.qr_id, "accept")
        exported.append(flow.export_qr(qr.qr_id))
    assert len(exported) == 6

    flow.pm_decide(exported[0].qr_id, "reject", "out of release scope")
    flow.pm_decide(exported[1].qr_id, "reject", "duplicate of planned refactoring")
    accepted = exported[2:]
    for qr in accepted:
        flow.pm_decide(qr.qr_id, "accept")
        flow.derive_task(qr.qr_id, f"Mitigation work for {qr.qr_id}")

    metrics = compute_qfl_metrics(flow.qrs())
    elapsed = time.perf_counter() - started

    assert metrics.qe_acceptance == pytest.approx(6 / 7, abs=1e-9)   # paper rounds to 85%
    assert metrics.pm_acceptance == pytest.approx(4 / 6, abs=1e-9)   # paper 66%
    assert metrics.end_to_end == pytest.approx(4 / 7, abs=1e-9)      # paper 57%
    assert elapsed < 1.0
    store.close()
    _report("1", f"6/7, 4/6, 4/7 reproduced in {elapsed:.3f}s")


# --- criterion 2: step-after-decision replay ----------------------------------------


def test_criterion_2_history_step_with_event_marker(tmp_path):
    store = Store(tmp_path / "store")
    for n in range(1, 6):
        store.append_assessment([point("passed_tests_percentage", n, 0.75)])
    store.record_event(
        DecisionEvent(
            event_id="qr-passed-tests:evt:1",
            kind=EventKind.QR_ADDED,
            subject_id="qr-passed-tests",
            timestamp=day(5),
        )
    )
    for n in range(6, 11):
        store.append_assessment([point("passed_tests_percentage", n, 0.95)])

    series = store.query_range("passed_tests_percentage", day(1), day(10))
    events = store.list_events(subject_id="qr-passed-tests")
    assert len(events) == 1
    marker = events[0].timestamp

    before = [p for p in series.points if p.timestamp <= marker]
    after = [p for p in series.points if p.timestamp > marker]
    assert {p.value for p in before} == {0.75}  # bit-exact round trip
    assert {p.value for p in after} == {0.95}
    step = after[0].value - before[-1].value
    assert step == pytest.approx(0.20, abs=1e-9)
    # the step is aligned: the first changed point is the first point after the marker
    assert before[-1].timestamp == marker and after[0].timestamp == day(6)
    store.close()
    _report("2", "+0.20 step aligned with the qr_added marker")


# --- criterion 3: bit-exact instantiation -------------------------------------------


def test_criterion_3_pattern_instantiation(example_catalogue):
    from qfl.catalogue import instantiate
    from qfl.errors import ParamOutOfRange

    pattern = example_catalogue.pattern("Complex files")
    assert instantiate(pattern, {"value": 95}) == "Ratio of non-complex files should be at least 95"
    with pytest.raises(ParamOutOfRange, match="0 <= value <= 100"):
        instantiate(pattern, {"value": 101})
    _report("3", "exact text and constraint citation")


# --- criterion 4: model scale ----------------------------------------------------------


def test_criterion_4_model_scale(tmp_path):
    started = time.perf_counter()
    config_path = init_workspace(tmp_path)
    engine = QflEngine(Config.load(config_path))
    assert len(engine.model.indicators) == 3
    assert len(engine.model.factors) == 9
    assert len(engine.model.metrics) == 22
    assert len({m.data_source_id for m in engine.model.metrics}) == 6
    for name, kind in SNAPSHOT_KINDS.items():
        engine.ingest(kind, tmp_path / "snapshots" / f"{name}.json")
    assessment, _ = engine.assess()
    elapsed = time.perf_counter() - started
    assert len(assessment) == 22 + 9 + 3
    assert all(0.0 <= p.value <= 1.0 for p in assessment.values())
    assert elapsed < 1.0
    engine.close()
    _report("4", f"3/9/22/6 model evaluated end-to-end in {elapsed:.3f}s")


# --- criterion 5: property suite ----------------------------------------------------------


def test_criterion_5a_evaluation_oracle_equivalence():
    rng = random.Random(5)
    for _ in range(1000):
        model = random_model(rng)
        values = {m.id: rng.random() for m in model.metrics}
        points = evaluate_snapshot(model, values, timestamp=day(0))
        expected = naive_rollup(model, values)
        for element_id, p in points.items():
            assert abs(p.value - expected[element_id]) <= 1e-12
    _report("5a", "1000 random models match the recursive oracle at 1e-12")


def test_criterion_5b_whatif_noop_equals_snapshot():
    rng = random.Random(55)
    for _ in range(200):
        model = random_model(rng, max_indicators=3, max_factors=6, max_metrics=12)
        values = {m.id: rng.random() for m in model.metrics}
        snap = evaluate_snapshot(model, values, timestamp=day(0))
        hypo = what_if(model, values, {}, timestamp=day(0))
        assert {k: p.value for k, p in snap.items()} == {k: p.value for k, p in hypo.items()}
    _report("5b", "what_if with no overrides is pointwise evaluate_snapshot")


def test_criterion_5c_aggregation_properties():
    from qfl.model import aggregate

    rng = random.Random(555)
    for _ in range(500):
        children = [
            (rng.random(), rng.uniform(0.01, 10.0)) for _ in range(rng.randint(1, 10))
        ]
        base = aggregate(children)
        assert 0.0 <= base <= 1.0
        # monotonicity in an arbitrary child
        index = rng.randrange(len(children))
        value, weight = children[index]
        raised = list(children)
        raised[index] = (min(1.0, value + rng.random()), weight)
        assert aggregate(raised) >= base - 1e-12
        # weight-scale invariance
        k = rng.uniform(0.01, 50.0)
        assert abs(aggregate([(v, w * k) for v, w in children]) - base) <= 1e-12
    _report("5c", "monotone and weight-scale invariant on randomized inputs")


def test_criterion_5d_state_machine_rejects_illegal_ops(tmp_path, example_model, example_catalogue):
    store = Store(tmp_path / "store")
    backlog = FileBacklogClient(tmp_path / "backlog.ndjson")
    flow = WorkflowEngine(store, backlog, example_catalogue, example_model)
    rng = random.Random(5555)

    legal = {
        ("qe_accept", QRState.SUGGESTED): QRState.ACCEPTED_BY_QE,
        ("qe_reject", QRState.SUGGESTED): QRState.REJECTED_BY_QE,
        ("export", QRState.ACCEPTED_BY_QE): QRState.EXPORTED,
        ("pm_accept", QRState.EXPORTED): QRState.ACCEPTED_BY_PM,
        ("pm_accept", QRState.POSTPONED): QRState.ACCEPTED_BY_PM,
        ("pm_reject", QRState.EXPORTED): QRState.REJECTED_BY_PM,
        ("pm_reject", QRState.POSTPONED): QRState.REJECTED_BY_PM,
        ("postpone", QRState.EXPORTED): QRState.POSTPONED,
        ("derive", QRState.ACCEPTED_BY_PM): QRState.DERIVED,
        ("derive", QRState.DERIVED): QRState.DERIVED,
    }
    op_names = ["qe_accept", "qe_reject", "export", "pm_accept", "pm_reject",
                "postpone", "derive", "complete"]

    def make_qr(n: int):
        alert = Alert(
            alert_id=f"complexity:0.8:warning:fuzz-{n}",
            element_id="complexity",
            observed_value=0.7,
            trigger_below=0.8,
            severity=Severity.WARNING,
            raised_at=day(n % 28),
            state=AlertState.OPEN,
        )
        return flow.suggest_qr(alert, "Complex files", {"value": 95})

    def apply(name: str, qr_id: str):
        if name == "qe_accept":
            flow.qe_decide(qr_id, "accept")
        elif name == "qe_reject":
            flow.qe_decide(qr_id, "reject", "fuzz")
        elif name == "export":
            flow.export_qr(qr_id)
        elif name == "pm_accept":
            flow.pm_decide(qr_id, "accept")
        elif name == "pm_reject":
            flow.pm_decide(qr_id, "reject", "fuzz")
        elif name == "postpone":
            flow.pm_decide(qr_id, "postpone")
        elif name == "derive":
            flow.derive_task(qr_id, "fuzz task")
        elif name == "complete":
            qr = flow.get(qr_id)
            rows = [
                {"id": t, "subject": "t", "type": "Task", "status": "Closed"}
                for t in qr.derived_task_ids
            ]
            flow.sync_completion(
                parse_snapshot(
                    {
                        "source_id": "openproject",
                        "source_kind": "backlog",
                        "captured_at": "2019-06-27T00:00:00Z",
                        "records": rows,
                    }
                )
            )

    total_ops = 0
    for n in range(40):
        qr = make_qr(n)
        reference = QRState.SUGGESTED
        for _ in range(250):
            name = rng.choice(op_names)
            total_ops += 1
            if name == "complete":
                # backlog sync never errors; it may only move Derived onward
                apply(name, qr.qr_id)
                expected = QRState.COMPLETED if reference is QRState.DERIVED else reference
                assert flow.get(qr.qr_id).state is expected
                reference = expected
                continue
            expected = legal.get((name, reference))
            if expected is None:
                with pytest.raises(IllegalTransition):
                    apply(name, qr.qr_id)
                assert flow.get(qr.qr_id).state is reference
            else:
                apply(name, qr.qr_id)
                assert flow.get(qr.qr_id).state is expected
                reference = expected
    assert total_ops >= 10_000
    store.close()
    _report("5d", f"{total_ops} random ops, every illegal one rejected in place")


def test_criterion_5e_alert_dedup_replay_oracle():
    threshold = Threshold(element_id="m", trigger_below=0.8)
    rng = random.Random(55555)
    for _ in range(50):
        values = [rng.random() for _ in range(10)]

        open_flag = False
        expected: list[tuple[int, str]] = []
        for n, v in enumerate(values):
            if v < 0.8 and not open_flag:
                expected.append((n, "raise"))
                open_flag = True
            elif v >= 0.8 and open_flag:
                expected.append((n, "resolve"))
                open_flag = False

        open_alerts: list[Alert] = []
        got: list[tuple[int, str]] = []
        for n, v in enumerate(values):
            assessment = {
                "m": AssessmentPoint(
                    element_id="m", layer=Layer.METRIC, timestamp=day(n),
                    value=v, provenance=Provenance.OBSERVED,
                )
            }
            new, resolved = check_thresholds(assessment, [threshold], open_alerts)
            got.extend((n, "raise") for _ in new)
            got.extend((n, "resolve") for _ in resolved)
            gone = {a.alert_id for a in resolved}
            open_alerts = [a for a in open_alerts if a.alert_id not in gone] + new
        assert got == expected
    _report("5e", "50 random 10-step series match the dedup oracle")


def test_criterion_5f_forecast_oracles():
    rng = random.Random(555555)
    for _ in range(100):
        n = rng.randint(2, 25)
        values = [rng.random() for _ in range(n)]
        alpha = rng.uniform(0.05, 1.0)
        points = tuple(
            AssessmentPoint(
                element_id="m", layer=Layer.METRIC, timestamp=day(i),
                value=v, provenance=Provenance.OBSERVED,
            )
            for i, v in enumerate(values)
        )
        hist = HistorySeries(element_id="m", points=points)

        level = values[0]
        for v in values[1:]:
            level = alpha * v + (1 - alpha) * level
        ses = ses_forecast(hist, alpha, horizon=2)
        for _, predicted in ses.points:
            assert abs(predicted - min(1.0, max(0.0, level))) <= 1e-9

        xs = [i * 86400.0 for i in range(n)]
        sxx, sx = sum(x * x for x in xs), sum(xs)
        sxy = sum(x * y for x, y in zip(xs, values))
        sy = sum(values)
        det = sxx * n - sx * sx
        slope = (sxy * n - sx * sy) / det
        intercept = (sxx * sy - sx * sxy) / det
        ols = linear_trend_forecast(hist, horizon=1)
        assert abs(ols.params["slope"] - slope) <= 1e-9
        assert abs(ols.params["intercept"] - intercept) <= 1e-9
    _report("5f", "SES and OLS match brute-force oracles at 1e-9")


def test_criterion_5g_backlog_idempotency(tmp_path):
    request = WorkPackageRequest(
        subject="The percentage of passed automatic tests should be at least 0.95",
        type_name="QualityRequirement",
        external_key="qr-idem",
    )
    mock = FileBacklogClient(tmp_path / "backlog.ndjson")
    first = mock.create_work_package(request)
    second = mock.create_work_package(request)
    assert first.wp_id == second.wp_id
    assert len(mock.fetch_all()) == 1

    stub = StubBacklogServer()
    try:
        client = HttpBacklogClient(stub.url, sleep=lambda s: None)
        first = client.create_work_package(request)
        second = client.create_work_package(request)
        assert first.wp_id == second.wp_id
        assert len(client.fetch_all()) == 1
        client.close()
    finally:
        stub.stop()
    _report("5g", "double-create left one work package on mock and stub")


# --- criterion 6: end-to-end loop ------------------------------------------------------------


def test_criterion_6_end_to_end_loop(tmp_path):
    started = time.perf_counter()
    config_path = init_workspace(tmp_path)
    engine = QflEngine(Config.load(config_path))
    for name, kind in SNAPSHOT_KINDS.items():
        engine.ingest(kind, tmp_path / "snapshots" / f"{name}.json")

    assessment, new_alerts = engine.assess()
    alert = next(a for a in new_alerts if a.element_id == "complexity")
    assert alert.observed_value == pytest.approx(0.70)
    assert alert.trigger_below == pytest.approx(0.80)

    qr = engine.workflow.suggest_qr(alert, "Complex files", {"value": 95})
    engine.workflow.qe_decide(qr.qr_id, "accept")
    exported = engine.workflow.export_qr(qr.qr_id)
    wp = {w.wp_id: w for w in engine.backlog.fetch_all()}[exported.backlog_ref]
    assert wp.type_name == "QualityRequirement"
    assert wp.status == "New"

    engine.workflow.pm_decide(qr.qr_id, "accept")
    task_id = engine.workflow.derive_task(qr.qr_id, "Break up the three over-complex files")
    engine.backlog.set_status(task_id, "Closed")
    engine.sync_backlog()

    final = engine.workflow.get(qr.qr_id)
    metrics = engine.workflow.metrics()
    elapsed = time.perf_counter() - started
    assert final.state is QRState.COMPLETED
    assert metrics.mitigation_task_completion == 1.0
    assert elapsed < 5.0
    engine.close()
    _report("6", f"ingest->assess->alert->QR->export->derive->sync in {elapsed:.3f}s")
