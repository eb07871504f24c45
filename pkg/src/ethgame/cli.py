"""Command line entry points: `serve` runs the experiment server,
`analyze` runs one study against an export directory or a raw log."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import analysis
from .engine import ExperimentConfig
from .errors import GameError
from .pricedata import load_price_csv


def _parse_listen(addr: str) -> tuple[str, int]:
    host, sep, port = addr.rpartition(":")
    if not sep:
        return addr, 8000
    return host or "127.0.0.1", int(port)


def _load_config(path: str) -> ExperimentConfig:
    raw = json.loads(Path(path).read_text(encoding="utf-8"))
    return ExperimentConfig.from_dict(raw)


def cmd_serve(args: argparse.Namespace) -> int:
    import uvicorn

    from .server.app import create_app
    from .server.service import ExperimentService

    config = _load_config(args.config)
    csv_text = Path(args.prices).read_text(encoding="utf-8")
    series = load_price_csv(args.prices)
    service = ExperimentService(
        config,
        series,
        args.log,
        price_path=args.prices,
        price_csv_text=csv_text,
    )
    app = create_app(service, admin_token=args.admin_token)
    host, port = _parse_listen(args.listen)
    uvicorn.run(app, host=host, port=port, log_level="info")
    return 0


def cmd_analyze(args: argparse.Namespace) -> int:
    if args.export_dir:
        tables = analysis.load_tables(args.export_dir)
    else:
        tables = analysis.tables_from_log(args.log)
    try:
        report = analysis.run_study(args.study, tables)
    except GameError as exc:
        print(f"{exc.code}: {exc}", file=sys.stderr)
        return 1
    print(analysis.render_study(args.study, report))
    if args.csv:
        analysis.write_report_csv(args.study, report, args.csv)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ethgame",
        description="classroom trading-game server and study runner",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    serve = sub.add_parser("serve", help="run the experiment HTTP server")
    serve.add_argument("--config", required=True, help="experiment config JSON")
    serve.add_argument("--prices", required=True, help="historical price CSV")
    serve.add_argument("--log", required=True, help="event log path (JSONL)")
    serve.add_argument(
        "--listen", default="127.0.0.1:8000", help="host:port to bind"
    )
    serve.add_argument("--admin-token", required=True, help="instructor token")
    serve.set_defaults(func=cmd_serve)

    analyze = sub.add_parser("analyze", help="run one study over recorded data")
    analyze.add_argument("study", choices=analysis.STUDIES)
    source = analyze.add_mutually_exclusive_group(required=True)
    source.add_argument("--export-dir", help="directory holding the exported CSVs")
    source.add_argument("--log", help="raw event log (JSONL)")
    analyze.add_argument("--csv", help="also write the report as CSV here")
    analyze.set_defaults(func=cmd_analyze)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
