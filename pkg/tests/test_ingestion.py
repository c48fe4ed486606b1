from __future__ import annotations

import json
import random

import pytest

from qfl.errors import SchemaError, SourceMissing
from qfl.ingestion import SourceKind, compute_metric_values, parse_snapshot


def _doc(kind: str, records: list[dict], source_id: str = "src") -> str:
    return json.dumps(
        {
            "source_id": source_id,
            "source_kind": kind,
            "captured_at": "2019-06-20T06:00:00Z",
            "records": records,
        }
    )


STATIC_RECORDS = [
    {"file": "a.java", "comment_density": 0.25, "complexity": 3, "duplicated_block_density": 0.0, "critical_or_blocker_violations": 0},
    {"file": "b.java", "comment_density": 0.3, "complexity": 20, "duplicated_block_density": 0.1, "critical_or_blocker_violations": 1},
    {"file": "c.java", "comment_density": 0.1, "complexity": 10, "duplicated_block_density": 0.02, "critical_or_blocker_violations": 0},
    {"file": "d.java", "comment_density": 0.4, "complexity": 7, "duplicated_block_density": 0.0, "critical_or_blocker_violations": 0},
]

FIG8_BACKLOG_ROWS = [
    {"id": "133", "subject": "Ratio of open issues of type bug should be below 5%", "type": "QualityRequirement", "status": "Closed"},
    {"id": "136", "subject": "Initiate a bug fix session adressing Archimate Issues", "type": "Task", "status": "Closed", "parent_id": "133"},
    {"id": "134", "subject": "Ratio of files without critical or blocker quality rule violations should be at least 90", "type": "QualityRequirement", "status": "Closed"},
    {"id": "138", "subject": "Review the validation process of Modelio components", "type": "Task", "status": "Closed", "parent_id": "134"},
    {"id": "156", "subject": "Refactor and evaluate validation process", "type": "Task", "status": "In progress", "parent_id": "134"},
    {"id": "135", "subject": "Ratio of open issues of type bug should be below %value%", "type": "QualityRequirement", "status": "Rejected"},
]


def test_static_analysis_snapshot_preserves_count():
    snapshot = parse_snapshot(_doc("static_analysis", STATIC_RECORDS), "static_analysis")
    assert len(snapshot.records) == 4
    assert snapshot.source_kind is SourceKind.STATIC_ANALYSIS


def test_backlog_rows_with_parent_links():
    snapshot = parse_snapshot(_doc("backlog", FIG8_BACKLOG_ROWS))
    by_id = {r["id"]: r for r in snapshot.records}
    assert by_id["133"]["type"] == "QualityRequirement"
    assert by_id["135"]["status"] == "Rejected"
    assert by_id["136"]["parent_id"] == "133"
    assert by_id["138"]["parent_id"] == "134"
    assert by_id["156"]["parent_id"] == "134"
    # every parent link resolves inside the snapshot
    for record in snapshot.records:
        parent = record.get("parent_id")
        assert parent is None or parent in by_id


def test_issue_closed_before_created_rejected():
    records = [
        {
            "id": "1",
            "type": "bug",
            "status": "Closed",
            "severity": "major",
            "created_at": "2019-05-10T00:00:00Z",
            "closed_at": "2019-05-01T00:00:00Z",
        }
    ]
    with pytest.raises(SchemaError, match="closed_at"):
        parse_snapshot(_doc("issue_tracker", records))


def test_schema_error_names_record_index_and_field():
    records = [dict(STATIC_RECORDS[0]), {k: v for k, v in STATIC_RECORDS[1].items() if k != "complexity"}]
    with pytest.raises(SchemaError, match=r"records\[1\].*complexity"):
        parse_snapshot(_doc("static_analysis", records))


def test_density_bounds_enforced():
    bad = [dict(STATIC_RECORDS[0], comment_density=1.4)]
    with pytest.raises(SchemaError, match="comment_density"):
        parse_snapshot(_doc("static_analysis", bad))


def test_negative_count_rejected():
    bad = [{"build_id": "b1", "passed_tests": -1, "total_tests": 10, "finished_at": "2019-06-01T00:00:00Z"}]
    with pytest.raises(SchemaError, match="passed_tests"):
        parse_snapshot(_doc("ci_builds", bad))


def test_future_capture_rejected():
    doc = json.dumps(
        {
            "source_id": "src",
            "source_kind": "vcs_log",
            "captured_at": "2099-01-01T00:00:00Z",
            "records": [],
        }
    )
    with pytest.raises(SchemaError, match="future"):
        parse_snapshot(doc)


def test_kind_mismatch_rejected():
    with pytest.raises(SchemaError, match="source_kind"):
        parse_snapshot(_doc("static_analysis", STATIC_RECORDS), "backlog")


def test_parse_serialize_parse_fixed_point():
    extra = dict(STATIC_RECORDS[0], custom_tag="keepme")
    snapshot = parse_snapshot(_doc("static_analysis", [extra] + STATIC_RECORDS[1:]))
    again = parse_snapshot(snapshot.to_json())
    assert again == snapshot
    assert again.records[0]["custom_tag"] == "keepme"


def test_compute_metric_values_complexity(example_model):
    snapshots = [
        parse_snapshot(_doc("static_analysis", STATIC_RECORDS, source_id="sonarqube"))
    ]
    pruned = _single_metric_model(example_model, "complexity")
    values = compute_metric_values(pruned, snapshots)
    assert values["complexity"] == 0.75


def test_compute_metric_values_passed_tests(example_model):
    records = [{"build_id": "1", "passed_tests": 95, "total_tests": 100, "finished_at": "2019-06-01T00:00:00Z"}]
    snapshots = [parse_snapshot(_doc("ci_builds", records, source_id="modelio_testing"))]
    pruned = _single_metric_model(example_model, "passed_tests_percentage")
    assert compute_metric_values(pruned, snapshots)["passed_tests_percentage"] == 0.95


def test_compute_metric_values_completion(example_model):
    rows = [dict(r, status="Closed") for r in FIG8_BACKLOG_ROWS]
    snapshots = [parse_snapshot(_doc("backlog", rows, source_id="openproject"))]
    pruned = _single_metric_model(example_model, "specification_task_completeness")
    assert compute_metric_values(pruned, snapshots)["specification_task_completeness"] == 1.0


def test_compute_metric_values_source_missing(example_model):
    with pytest.raises(SourceMissing, match="sonarqube"):
        compute_metric_values(_single_metric_model(example_model, "complexity"), [])


def test_compute_values_order_insensitive_and_bounded(example_model):
    rng = random.Random(7)
    shuffled = list(STATIC_RECORDS)
    rng.shuffle(shuffled)
    pruned = _single_metric_model(example_model, "complexity")
    a = compute_metric_values(
        pruned, [parse_snapshot(_doc("static_analysis", STATIC_RECORDS, source_id="sonarqube"))]
    )
    b = compute_metric_values(
        pruned, [parse_snapshot(_doc("static_analysis", shuffled, source_id="sonarqube"))]
    )
    assert a == b
    assert all(0.0 <= v <= 1.0 for v in a.values())


def test_latest_snapshot_wins_per_source(example_model):
    old = json.loads(_doc("static_analysis", STATIC_RECORDS, source_id="sonarqube"))
    old["captured_at"] = "2019-06-01T00:00:00Z"
    new = json.loads(
        _doc("static_analysis", [dict(r, complexity=1) for r in STATIC_RECORDS], source_id="sonarqube")
    )
    pruned = _single_metric_model(example_model, "complexity")
    values = compute_metric_values(
        pruned, [parse_snapshot(old), parse_snapshot(new)]
    )
    assert values["complexity"] == 1.0


def _single_metric_model(model, metric_id):
    """Shrink the example model to one metric for focused evaluator checks."""
    from qfl.model import QualityModel, FactorDef, IndicatorDef, ChildRef

    metric = next(m for m in model.metrics if m.id == metric_id)
    return QualityModel(
        model_id="pruned",
        version="1",
        metrics=(metric,),
        factors=(FactorDef(id="f", name="f", children=(ChildRef(metric.id, 1.0),)),),
        indicators=(IndicatorDef(id="i", name="i", children=(ChildRef("f", 1.0),)),),
    )
