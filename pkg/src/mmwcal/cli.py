"""Command-line front end: plan, simulate, analyze, verify, report."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path
from typing import Optional, Sequence

from . import campaign
from .config import ConfigError, load_config
from .records import RecordFormatError

EXIT_CONFIG_ERROR = 2
EXIT_INPUT_ERROR = 3


def _add_config(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", type=Path, required=True, help="campaign YAML file")


def _add_thresholds(p: argparse.ArgumentParser) -> None:
    p.add_argument("--spread-db", type=float, default=None, help="max allowed max-min spread")
    p.add_argument("--std-db", type=float, default=None, help="max allowed sample sigma")
    p.add_argument("--eq11-literal", action="store_true",
                   help="subtract measured cross-pol path loss and XPD for V-H penetration")


def _add_halfangle(p: argparse.ArgumentParser) -> None:
    p.add_argument("--strict-halfangle", action="store_true",
                   help="use HPBW/2 instead of the full HPBW in the clearance rule")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mmwcal", description="Plan, simulate and verify mmWave XPD / penetration-loss campaigns."
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("plan", help="report geometric limits and rule violations")
    _add_config(p)
    _add_halfangle(p)
    p.add_argument("--json", action="store_true", help="print the plan as JSON")

    p = sub.add_parser("simulate", help="synthesize measurement records and PDPs")
    _add_config(p)
    p.add_argument("--out", type=Path, required=True)
    p.add_argument("--seed", type=int, default=None)

    p = sub.add_parser("analyze", help="per-distance XPD and penetration tables")
    p.add_argument("records", type=Path, help="simulation output directory or records.csv")
    _add_config(p)
    _add_thresholds(p)
    p.add_argument("--out", type=Path, default=None, help="also write analysis.json here")

    p = sub.add_parser("verify", help="geometry + consistency verdict")
    p.add_argument("records", type=Path)
    _add_config(p)
    _add_thresholds(p)
    _add_halfangle(p)
    p.add_argument("--out", type=Path, default=Path("runs"), help="root directory for run reports")

    p = sub.add_parser("report", help="export plot-ready series from a verification report")
    p.add_argument("report", type=Path, help="report.json or its run directory")
    p.add_argument("--out", type=Path, default=None)
    return parser


def _run(args: argparse.Namespace) -> int:
    if args.command == "report":
        for path in campaign.export_series(args.report, args.out):
            print(path)
        return 0

    cfg = load_config(args.config)

    if args.command == "plan":
        plan = campaign.plan_campaign(cfg, strict_halfangle=args.strict_halfangle)
        if args.json:
            print(json.dumps(plan, indent=2))
        else:
            sys.stdout.write(campaign.format_plan(plan))
        return 0 if plan["ok"] else campaign.Verdict.GEOMETRY_INVALID.exit_code

    if args.command == "simulate":
        manifest = campaign.simulate_campaign(cfg, args.out, args.seed)
        for name, info in manifest["scenarios"].items():
            print(f"{name}: {info['count']} records -> {args.out / info['records']}")
        return 0

    thresholds = campaign.with_thresholds(cfg, args.spread_db, args.std_db)
    if args.command == "analyze":
        results = campaign.analyze_campaign(
            args.records, cfg, thresholds=thresholds, eq11_literal=args.eq11_literal
        )
        sys.stdout.write(campaign.format_analysis(results))
        if args.out is not None:
            args.out.mkdir(parents=True, exist_ok=True)
            (args.out / "analysis.json").write_text(json.dumps(results, indent=2) + "\n")
        return 0

    if args.command == "verify":
        report = campaign.verify_campaign(
            args.records,
            cfg,
            thresholds=thresholds,
            strict_halfangle=args.strict_halfangle,
            eq11_literal=args.eq11_literal,
        )
        run_dir = campaign.persist_report(report, args.out)
        sys.stdout.write(campaign.format_report(report))
        print(f"report: {run_dir / 'report.json'}")
        return report["exit_code"]

    raise AssertionError(args.command)


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return _run(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG_ERROR
    except (campaign.PairingError, RecordFormatError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT_ERROR


if __name__ == "__main__":
    sys.exit(main())
