"""Operator command line: the headless twin of the dashboard.

Exit codes are stable for scripting: 0 ok, 1 domain error, 2 usage error,
3 I/O or remote error. With --format json every command prints the same body
the corresponding service endpoint would return.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path
from typing import Any, Sequence

from . import serialize
from .analytics import DEFAULT_ALPHA, DEFAULT_HORIZON
from .engine import Config, QflEngine, discover_config, init_workspace
from .errors import IO_ERRORS, QflError
from .workflow import QRState

EXIT_OK = 0
EXIT_DOMAIN = 1
EXIT_USAGE = 2
EXIT_IO = 3

_QE_STATES = {QRState.SUGGESTED}
_PM_STATES = {QRState.EXPORTED, QRState.POSTPONED}


def _color(text: str, code: str) -> str:
    if not sys.stdout.isatty():
        return text
    return f"\033[{code}m{text}\033[0m"


def _table(rows: list[Sequence[str]], header: Sequence[str]) -> str:
    all_rows = [list(header)] + [list(r) for r in rows]
    widths = [max(len(row[i]) for row in all_rows) for i in range(len(header))]
    lines = []
    for index, row in enumerate(all_rows):
        lines.append("  ".join(cell.ljust(widths[i]) for i, cell in enumerate(row)).rstrip())
        if index == 0:
            lines.append("  ".join("-" * widths[i] for i in range(len(header))))
    return "\n".join(lines)


def _emit(args: argparse.Namespace, body: Any, table: str) -> None:
    if args.format == "json":
        print(json.dumps(body, indent=2))
    else:
        print(table)


def _pct(value: float) -> str:
    return f"{value * 100:.2f}%"


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qfl", description="Quality feedback loop engine"
    )
    parser.add_argument("--config", help="path to the workspace config file")
    parser.add_argument(
        "--format", choices=("table", "json"), default="table", help="output format"
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_init = sub.add_parser("init", help="scaffold a workspace with the example configuration")
    p_init.add_argument("directory", nargs="?", default=".")
    p_init.add_argument("--backlog-url", help="backlog service URL (default: file mock)")

    p_ingest = sub.add_parser("ingest", help="validate and stage a snapshot document")
    p_ingest.add_argument("source_kind")
    p_ingest.add_argument("file")

    sub.add_parser("assess", help="assess staged snapshots and check thresholds")

    p_alerts = sub.add_parser("alerts", help="alert inbox")
    alerts_sub = p_alerts.add_subparsers(dest="alerts_command", required=True)
    p_alerts_list = alerts_sub.add_parser("list")
    p_alerts_list.add_argument("--state", choices=("open", "acknowledged", "resolved"))
    p_alerts_ack = alerts_sub.add_parser("ack")
    p_alerts_ack.add_argument("alert_id")

    p_qr = sub.add_parser("qr", help="quality requirement workflow")
    qr_sub = p_qr.add_subparsers(dest="qr_command", required=True)
    p_qr_list = qr_sub.add_parser("list")
    p_qr_list.add_argument("--state")
    p_qr_suggest = qr_sub.add_parser("suggest")
    p_qr_suggest.add_argument("alert_id")
    p_qr_suggest.add_argument("--pattern", required=True)
    p_qr_suggest.add_argument(
        "--param", action="append", default=[], metavar="NAME=VALUE"
    )
    for name in ("accept", "reject"):
        p_decide = qr_sub.add_parser(name)
        p_decide.add_argument("qr_id")
        p_decide.add_argument("--stage", choices=("qe", "pm"))
        p_decide.add_argument("--rationale", default="")
    p_qr_export = qr_sub.add_parser("export")
    p_qr_export.add_argument("qr_id")
    p_qr_derive = qr_sub.add_parser("derive")
    p_qr_derive.add_argument("qr_id")
    p_qr_derive.add_argument("--subject", required=True)
    qr_sub.add_parser("sync")

    sub.add_parser("qfl", help="the loop's own health metrics and indicator")

    p_whatif = sub.add_parser("whatif", help="recompute indicators with pinned values")
    p_whatif.add_argument(
        "--set", action="append", default=[], dest="overrides", metavar="ELEMENT=VALUE"
    )

    p_forecast = sub.add_parser("forecast", help="forecast an element's evolution")
    p_forecast.add_argument("--element", required=True)
    p_forecast.add_argument("--method", choices=("ses", "trend"), default="ses")
    p_forecast.add_argument("--horizon", type=int, default=DEFAULT_HORIZON)
    p_forecast.add_argument("--alpha", type=float, default=DEFAULT_ALPHA)

    p_serve = sub.add_parser("serve", help="run the HTTP service")
    p_serve.add_argument("--host", default="127.0.0.1")
    p_serve.add_argument("--port", type=int, default=8765)
    p_serve.add_argument("--ui", help="directory with the built dashboard to mount at /ui")

    p_csv = sub.add_parser("export-csv", help="dump the assessment history as CSV")
    p_csv.add_argument("--out", help="output file (default: stdout)")

    return parser


def _parse_value(text: str) -> Any:
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def _pairs(entries: list[str], what: str) -> dict[str, Any]:
    pairs: dict[str, Any] = {}
    for entry in entries:
        name, sep, value = entry.partition("=")
        if not sep or not name:
            raise QflError(f"bad {what} {entry!r}, expected NAME=VALUE")
        pairs[name] = _parse_value(value)
    return pairs


def _engine(args: argparse.Namespace) -> QflEngine:
    return QflEngine(Config.load(discover_config(args.config)))


def _run_init(args: argparse.Namespace) -> int:
    config_path = init_workspace(args.directory, backlog_url=args.backlog_url)
    print(f"workspace ready: {config_path}")
    return EXIT_OK


def _run_ingest(args: argparse.Namespace, engine: QflEngine) -> int:
    snapshot = engine.ingest(args.source_kind, args.file)
    print(
        f"staged {snapshot.source_id} ({snapshot.source_kind.value}, "
        f"{len(snapshot.records)} records)"
    )
    return EXIT_OK


def _run_assess(args: argparse.Namespace, engine: QflEngine) -> int:
    assessment, new_alerts = engine.assess()
    body = serialize.assessment_body(engine.latest_assessment())
    rows = [
        (engine.model.element(ind.id).name, _pct(assessment[ind.id].value))
        for ind in engine.model.indicators
    ]
    table = _table(rows, ("indicator", "value"))
    if new_alerts:
        table += "\n\nnew alerts:\n" + "\n".join(
            f"  {_color(a.severity.value, '31')} {a.element_id}: "
            f"{_pct(a.observed_value)} < {_pct(a.trigger_below)}"
            for a in new_alerts
        )
    _emit(args, body, table)
    return EXIT_OK


def _run_alerts(args: argparse.Namespace, engine: QflEngine) -> int:
    if args.alerts_command == "ack":
        alert = engine.alerts.acknowledge(args.alert_id)
        _emit(args, serialize.alert_body(alert), f"acknowledged {alert.alert_id}")
        return EXIT_OK
    alerts = engine.alerts.alerts(args.state)
    body = serialize.alerts_body(alerts)
    rows = [
        (
            a.alert_id,
            a.element_id,
            _pct(a.observed_value),
            _pct(a.trigger_below),
            a.severity.value,
            a.state.value,
        )
        for a in alerts
    ]
    _emit(
        args,
        body,
        _table(rows, ("alert", "element", "value", "trigger", "severity", "state")),
    )
    return EXIT_OK


def _decide(args: argparse.Namespace, engine: QflEngine, decision: str) -> int:
    qr = engine.workflow.get(args.qr_id)
    stage = args.stage
    if stage is None:
        stage = "qe" if qr.state in _QE_STATES else "pm"
    if stage == "qe":
        updated = engine.workflow.qe_decide(args.qr_id, decision, args.rationale)
    else:
        updated = engine.workflow.pm_decide(args.qr_id, decision, args.rationale)
    _emit(
        args,
        serialize.qr_body(updated),
        f"{updated.qr_id}: {updated.state.value}",
    )
    return EXIT_OK


def _run_qr(args: argparse.Namespace, engine: QflEngine) -> int:
    command = args.qr_command
    if command == "list":
        qrs = engine.workflow.qrs(args.state)
        body = serialize.qrs_body(qrs)
        rows = [
            (qr.qr_id, qr.state.value, qr.backlog_ref or "-", qr.text) for qr in qrs
        ]
        _emit(args, body, _table(rows, ("qr", "state", "wp", "text")))
        return EXIT_OK
    if command == "suggest":
        alert = engine.alerts.get(args.alert_id)
        qr = engine.workflow.suggest_qr(
            alert, args.pattern, _pairs(args.param, "--param")
        )
        _emit(args, serialize.qr_body(qr), f"{qr.qr_id}: {qr.text}")
        return EXIT_OK
    if command == "accept":
        return _decide(args, engine, "accept")
    if command == "reject":
        return _decide(args, engine, "reject")
    if command == "export":
        qr = engine.workflow.export_qr(args.qr_id)
        _emit(
            args,
            serialize.qr_body(qr),
            f"{qr.qr_id}: exported as work package {qr.backlog_ref}",
        )
        return EXIT_OK
    if command == "derive":
        task_id = engine.workflow.derive_task(args.qr_id, args.subject)
        qr = engine.workflow.get(args.qr_id)
        body = serialize.qr_body(qr)
        body["new_task_id"] = task_id
        _emit(args, body, f"{qr.qr_id}: derived task {task_id}")
        return EXIT_OK
    if command == "sync":
        updated = engine.sync_backlog()
        _emit(
            args,
            serialize.qrs_body(updated),
            "\n".join(f"{qr.qr_id}: {qr.state.value}" for qr in updated) or "nothing to update",
        )
        return EXIT_OK
    raise AssertionError(f"unhandled qr command {command!r}")


def _run_qfl(args: argparse.Namespace, engine: QflEngine) -> int:
    metrics = engine.workflow.metrics()
    body = serialize.qfl_body(metrics)
    rows = [(name, _pct(value)) for name, value in body["metrics"].items()]
    rows += [(name, _pct(value)) for name, value in body["rollup"].items()]
    _emit(args, body, _table(rows, ("metric", "value")))
    return EXIT_OK


def _run_whatif(args: argparse.Namespace, engine: QflEngine) -> int:
    overrides = {k: float(v) for k, v in _pairs(args.overrides, "--set").items()}
    points = engine.whatif(overrides)
    body = serialize.assessment_body(points)
    rows = [
        (engine.model.element(ind.id).name, _pct(points[ind.id].value))
        for ind in engine.model.indicators
    ]
    _emit(args, body, _table(rows, ("indicator", "what-if value")))
    return EXIT_OK


def _run_forecast(args: argparse.Namespace, engine: QflEngine) -> int:
    method = "linear_trend" if args.method == "trend" else args.method
    result = engine.forecast(args.element, method, args.horizon, args.alpha)
    body = serialize.forecast_body(result)
    rows = [(p["timestamp"], _pct(p["value"])) for p in body["points"]]
    _emit(args, body, _table(rows, ("timestamp", "prediction")))
    return EXIT_OK


def _run_export_csv(args: argparse.Namespace, engine: QflEngine) -> int:
    text = engine.store.export_csv()
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
        print(f"wrote {args.out}")
    else:
        print(text, end="")
    return EXIT_OK


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)

    if args.command == "init":
        return _run_init(args)

    if args.command == "serve":
        from .service import serve

        serve(
            Config.load(discover_config(args.config)),
            host=args.host,
            port=args.port,
            ui_dir=args.ui,
        )
        return EXIT_OK

    try:
        engine = _engine(args)
    except QflError as error:
        print(f"error [{error.code}]: {error}", file=sys.stderr)
        return EXIT_IO if isinstance(error, IO_ERRORS) else EXIT_DOMAIN
    except OSError as error:
        print(f"error [io]: {error}", file=sys.stderr)
        return EXIT_IO

    handlers = {
        "ingest": _run_ingest,
        "assess": _run_assess,
        "alerts": _run_alerts,
        "qr": _run_qr,
        "qfl": _run_qfl,
        "whatif": _run_whatif,
        "forecast": _run_forecast,
        "export-csv": _run_export_csv,
    }
    try:
        return handlers[args.command](args, engine)
    except QflError as error:
        print(f"error [{error.code}]: {error}", file=sys.stderr)
        return EXIT_IO if isinstance(error, IO_ERRORS) else EXIT_DOMAIN
    except OSError as error:
        print(f"error [io]: {error}", file=sys.stderr)
        return EXIT_IO
    finally:
        engine.close()


if __name__ == "__main__":
    sys.exit(main())
