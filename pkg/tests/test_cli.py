from __future__ import annotations

import json
from pathlib import Path

import pytest
from fastapi.testclient import TestClient

from qfl.cli import main
from qfl.engine import Config, QflEngine
from qfl.service import create_app

from conftest import SNAPSHOT_KINDS


@pytest.fixture
def cli_workspace(tmp_path):
    """Workspace driven entirely through the CLI."""
    assert main(["init", str(tmp_path)]) == 0
    config = str(tmp_path / "qfl.config")
    for name, kind in SNAPSHOT_KINDS.items():
        snapshot = str(tmp_path / "snapshots" / f"{name}.json")
        assert main(["--config", config, "ingest", kind, snapshot]) == 0
    return config


def run_json(capsys, argv) -> object:
    code = main(argv)
    captured = capsys.readouterr()
    assert code == 0, captured.err
    return json.loads(captured.out)


def test_assess_prints_three_indicators(cli_workspace, capsys):
    assert main(["--config", cli_workspace, "assess"]) == 0
    out = capsys.readouterr().out
    for name in ("Product Quality", "Process Performance", "Product Readiness"):
        assert name in out


def test_assess_matches_library_evaluation(cli_workspace, capsys):
    body = run_json(capsys, ["--config", cli_workspace, "--format", "json", "assess"])
    # oracle: evaluate the staged snapshots directly through the library
    engine = QflEngine(Config.load(cli_workspace))
    from qfl.ingestion import compute_metric_values
    from qfl.model import evaluate_snapshot

    values = compute_metric_values(engine.model, engine.staged_snapshots())
    expected = evaluate_snapshot(engine.model, values)
    got = {p["element_id"]: p["value"] for p in body}
    for element_id, point in expected.items():
        assert got[element_id] == pytest.approx(point.value, abs=1e-12)
    engine.close()


def test_cli_json_schema_identical_to_service(cli_workspace, capsys):
    assert main(["--config", cli_workspace, "assess"]) == 0
    capsys.readouterr()

    cli_body = run_json(capsys, ["--config", cli_workspace, "--format", "json", "assess"])
    cli_alerts = run_json(capsys, ["--config", cli_workspace, "--format", "json", "alerts", "list"])
    cli_qfl = run_json(capsys, ["--config", cli_workspace, "--format", "json", "qfl"])

    engine = QflEngine(Config.load(cli_workspace))
    with TestClient(create_app(engine)) as tc:
        assert tc.get("/assessment/latest").json() == cli_body
        assert tc.get("/alerts").json() == cli_alerts
        assert tc.get("/qfl").json() == cli_qfl
    engine.close()


def test_qr_flow_and_reject_without_rationale(cli_workspace, capsys):
    assert main(["--config", cli_workspace, "assess"]) == 0
    capsys.readouterr()
    alerts = run_json(capsys, ["--config", cli_workspace, "--format", "json", "alerts", "list"])
    alert_id = next(a["alert_id"] for a in alerts if a["element_id"] == "complexity")

    qr = run_json(
        capsys,
        ["--config", cli_workspace, "--format", "json", "qr", "suggest", alert_id,
         "--pattern", "Complex files", "--param", "value=95"],
    )
    assert qr["text"] == "Ratio of non-complex files should be at least 95"

    code = main(["--config", cli_workspace, "qr", "reject", qr["qr_id"]])
    err = capsys.readouterr().err
    assert code == 1
    assert "MissingRationale" in err

    assert main(["--config", cli_workspace, "qr", "accept", qr["qr_id"]]) == 0
    assert main(["--config", cli_workspace, "qr", "export", qr["qr_id"]]) == 0
    assert main(["--config", cli_workspace, "qr", "accept", qr["qr_id"]]) == 0
    capsys.readouterr()
    derived = run_json(
        capsys,
        ["--config", cli_workspace, "--format", "json", "qr", "derive", qr["qr_id"],
         "--subject", "Split the exporter"],
    )
    assert derived["state"] == "Derived"

    listed = run_json(capsys, ["--config", cli_workspace, "--format", "json", "qr", "list"])
    assert [q["qr_id"] for q in listed] == [qr["qr_id"]]


def test_unknown_command_exits_2(capsys):
    assert main(["bogus"]) == 2


def test_missing_config_is_domain_error(tmp_path, capsys):
    assert main(["--config", str(tmp_path / "nope.config"), "assess"]) == 1
    assert "ConfigError" in capsys.readouterr().err


def test_ingest_missing_file_exits_3(cli_workspace, capsys):
    code = main(["--config", cli_workspace, "ingest", "vcs_log", "/nonexistent.json"])
    assert code == 3


def test_whatif_and_forecast(cli_workspace, capsys):
    assert main(["--config", cli_workspace, "assess"]) == 0
    capsys.readouterr()
    body = run_json(
        capsys,
        ["--config", cli_workspace, "--format", "json", "whatif", "--set", "complexity=1.0"],
    )
    values = {p["element_id"]: p for p in body}
    assert values["complexity"]["value"] == 1.0
    assert values["complexity"]["provenance"] == "whatif"

    forecast = run_json(
        capsys,
        ["--config", cli_workspace, "--format", "json", "forecast",
         "--element", "complexity", "--horizon", "2"],
    )
    assert len(forecast["points"]) == 2


def test_export_csv(cli_workspace, capsys, tmp_path):
    assert main(["--config", cli_workspace, "assess"]) == 0
    out = tmp_path / "history.csv"
    assert main(["--config", cli_workspace, "export-csv", "--out", str(out)]) == 0
    lines = out.read_text().strip().splitlines()
    assert lines[0] == "element_id,timestamp,value,provenance"
    assert len(lines) > 20


def test_reassess_is_idempotent(cli_workspace, capsys):
    assert main(["--config", cli_workspace, "assess"]) == 0
    assert main(["--config", cli_workspace, "assess"]) == 0
    capsys.readouterr()
    history = run_json(
        capsys,
        ["--config", cli_workspace, "--format", "json", "assess"],
    )
    engine = QflEngine(Config.load(cli_workspace))
    series = engine.store.full_series("complexity")
    assert len(series.points) == 1  # same capture timestamp replaces, not appends
    engine.close()
