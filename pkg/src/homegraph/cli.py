"""Command-line entry points: headless runs and the live service."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .config import TICKS_MAX_DEFAULT
from .orchestrator import run_headless
from .sim import ScenarioError


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="homegraph",
        description="Semantic scene graph fetch-robot simulator",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run a scenario headless and print the report")
    run.add_argument("scenario", type=Path)
    run.add_argument("--seed", type=int, default=None)
    run.add_argument("--ticks-max", type=int, default=TICKS_MAX_DEFAULT)
    run.add_argument("--no-cues", action="store_true",
                     help="suppress scripted cues and human answers")
    run.add_argument("--report", type=Path, default=None,
                     help="write the run report JSON here")
    run.add_argument("--log", type=Path, default=None,
                     help="write the event log (JSON lines) here")

    serve = sub.add_parser("serve", help="serve a scenario over HTTP")
    serve.add_argument("scenario", type=Path)
    serve.add_argument("--port", type=int, default=8000)
    serve.add_argument("--host", default="127.0.0.1")
    serve.add_argument("--rate", type=float, default=10.0,
                       help="ticks per wall second while running (0 = max speed)")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "run":
        try:
            report, _ = run_headless(
                args.scenario,
                seed=args.seed,
                ticks_max=args.ticks_max,
                no_cues=args.no_cues,
                report_path=args.report,
                log_path=args.log,
            )
        except (ScenarioError, FileNotFoundError) as exc:
            print(f"error: {exc}", file=sys.stderr)
            return 2
        print(json.dumps(report.to_json(), indent=2, sort_keys=True))
        return 0 if report.success else 1
    if args.command == "serve":
        import uvicorn

        from .server import create_app

        try:
            app = create_app(args.scenario, rate=args.rate)
        except (ScenarioError, FileNotFoundError) as exc:
            print(f"error: {exc}", file=sys.stderr)
            return 2
        uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
        return 0
    return 2


if __name__ == "__main__":
    sys.exit(main())
