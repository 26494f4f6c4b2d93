"""Command-line entry points.

Four subcommands cover the campaign lifecycle: `run` executes a
scenario to its horizon and writes the event log, hourly timeline CSV,
and report JSON; `serve` hosts the control API with wall-clock pacing
for interactive steering; `report` recomputes a report from an event
log alone; `validate` checks a scenario file and exits.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import os
import sys
from pathlib import Path

from .events import IntegrityError
from .report import (
    report_from_log,
    run_campaign,
    timeline_csv,
    timeline_from_log,
)
from .scenario import ScenarioError, load_scenario
from .service import DEFAULT_COMPRESSION, serve_campaign

PORT_ENV_VAR = "CLOUDBURST_PORT"
DEFAULT_PORT = 8000


def default_port(environ=os.environ) -> int:
    """Service port fallback: $CLOUDBURST_PORT when set, else 8000."""
    raw = environ.get(PORT_ENV_VAR)
    if raw is None:
        return DEFAULT_PORT
    try:
        port = int(raw)
    except ValueError:
        raise ScenarioError(
            f"{PORT_ENV_VAR} must be an integer, got {raw!r}"
        ) from None
    if not (0 < port < 65536):
        raise ScenarioError(f"{PORT_ENV_VAR} out of range: {port}")
    return port


def _load(path: str, seed: int | None):
    scenario = load_scenario(path)
    if seed is not None:
        scenario = dataclasses.replace(scenario, seed=seed)
    return scenario


def _cmd_run(args) -> int:
    scenario = _load(args.scenario, args.seed)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    log_path = out_dir / f"{scenario.name}.events.jsonl"
    result = run_campaign(scenario, log_path=log_path)
    report = result.report

    csv_path = out_dir / f"{scenario.name}.timeline.csv"
    csv_path.write_text(timeline_csv(result.timeline), encoding="utf-8")
    report_path = out_dir / f"{scenario.name}.report.json"
    report_path.write_text(
        json.dumps(report.as_dict(), indent=2, sort_keys=True) + "\n",
        encoding="utf-8",
    )

    print(f"event log    {log_path}")
    print(f"timeline     {csv_path}")
    print(f"report       {report_path}")
    print(
        f"{scenario.name}: {report.total_gpu_days:.1f} GPU-days, "
        f"${report.total_cost_usd:,.2f} spent, "
        f"{report.eflop_hours:.3f} fp32 EFLOP-hours, "
        f"peak {report.peak_gpus} GPUs"
    )
    return 0


def _cmd_serve(args) -> int:
    scenario = _load(args.scenario, args.seed)
    port = args.port if args.port is not None else default_port()
    console_dir = args.console if args.console else None
    serve_campaign(
        scenario,
        port=port,
        compression=args.compression,
        log_path=args.log,
        console_dir=console_dir,
        host=args.host,
    )
    return 0


def _cmd_report(args) -> int:
    report = report_from_log(args.log)
    if args.timeline:
        rows = timeline_from_log(args.log)
        Path(args.timeline).write_text(timeline_csv(rows), encoding="utf-8")
    print(json.dumps(report.as_dict(), indent=2, sort_keys=True))
    return 0


def _cmd_validate(args) -> int:
    scenario = load_scenario(args.scenario)
    print(
        f"OK: {scenario.name}: {len(scenario.groups)} groups, "
        f"{scenario.workload.job_count} jobs, horizon {scenario.horizon_s}s"
    )
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cloudburst",
        description="Deterministic spot-GPU campaign simulator and control service",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser(
        "run", help="run a scenario to its horizon and write the outputs"
    )
    p_run.add_argument("scenario", help="scenario JSON file")
    p_run.add_argument("--seed", type=int, help="override the scenario seed")
    p_run.add_argument(
        "--out", default=".", help="output directory (default: current)"
    )
    p_run.set_defaults(func=_cmd_run)

    p_serve = sub.add_parser(
        "serve", help="host the control API, pacing the clock against wall time"
    )
    p_serve.add_argument("scenario", help="scenario JSON file")
    p_serve.add_argument(
        "--port",
        type=int,
        help=f"listen port (default: ${PORT_ENV_VAR} or {DEFAULT_PORT})",
    )
    p_serve.add_argument(
        "--compression",
        type=float,
        default=DEFAULT_COMPRESSION,
        help="simulated seconds per wall second (default: %(default)s)",
    )
    p_serve.add_argument("--seed", type=int, help="override the scenario seed")
    p_serve.add_argument("--log", help="persist the event log to this path")
    p_serve.add_argument(
        "--console", help="serve this directory of static console assets"
    )
    p_serve.add_argument(
        "--host", default="127.0.0.1", help="bind address (default: %(default)s)"
    )
    p_serve.set_defaults(func=_cmd_serve)

    p_report = sub.add_parser(
        "report", help="recompute a report from an event log"
    )
    p_report.add_argument("log", help="event log (JSON-lines)")
    p_report.add_argument(
        "--timeline", help="also write the hourly timeline CSV to this path"
    )
    p_report.set_defaults(func=_cmd_report)

    p_validate = sub.add_parser("validate", help="check a scenario file")
    p_validate.add_argument("scenario", help="scenario JSON file")
    p_validate.set_defaults(func=_cmd_validate)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ScenarioError, IntegrityError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    except FileNotFoundError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    except KeyboardInterrupt:
        return 130


if __name__ == "__main__":
    sys.exit(main())
