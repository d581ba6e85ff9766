"""
Command-line entry point

    run --config FILE [--seed N] [--reps N] [--format json|csv|text] [--out DIR] [--workers N]
    sweep --attacks a,b,c --test-pairs 1,4,16,64 [--reps N] [--seed N] [--out FILE]
    paper-check
    schema
    serve

Exit codes: 0 success, 1 configuration violation or failed check, 2 I/O failure.
"""
import argparse
import json
import sys
from typing import List, Optional

from loguru import logger
from pydantic import ValidationError

from app.config import settings
from app.core.exceptions import QscdcError
from app.core.logging import setup_logging
from app.harness.paper_check import cmd_paper_check
from app.harness.runner import apply_overrides, cmd_run, cmd_sweep, load_run_config, sweep_frame
from app.models.schemas import SessionReport

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_IO = 2


def _csv_list(cast):
    def parse(text: str):
        try:
            return [cast(item.strip()) for item in text.split(",") if item.strip()]
        except ValueError as e:
            raise argparse.ArgumentTypeError(str(e))
    return parse


def _positive_ints(text: str) -> List[int]:
    values = _csv_list(int)(text)
    if not values or any(value < 1 for value in values):
        raise argparse.ArgumentTypeError(f"expected positive integers, got {text!r}")
    return values


def _positive_int(text: str) -> int:
    """argparse type for counts such as --reps and --workers"""
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text!r}")
    if value < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text!r}")
    return value


def run_command(args: argparse.Namespace) -> int:
    """`run`: config file plus flag overrides, prints the run summary"""
    run_config = apply_overrides(
        load_run_config(args.config),
        seed=args.seed,
        reps=args.reps,
        fmt=args.format,
        out_dir=args.out,
        workers=args.workers,
    )
    summary = cmd_run(run_config)
    print(summary.model_dump_json(indent=2))
    return EXIT_OK


def sweep_command(args: argparse.Namespace) -> int:
    """`sweep`: detection table as CSV on stdout"""
    rows = cmd_sweep(args.attacks, args.test_pairs, args.reps, seed=args.seed)
    frame = sweep_frame(rows)
    if args.out:
        frame.to_csv(args.out, index=False, lineterminator="\n")
    sys.stdout.write(frame.to_csv(index=False, lineterminator="\n"))
    return EXIT_OK


def paper_check_command(args: argparse.Namespace) -> int:
    """`paper-check`: one PASS/FAIL line per check; exit 1 if any fails"""
    report = cmd_paper_check()
    for check in report.checks:
        status = "PASS" if check.passed else "FAIL"
        print(f"{status}  {check.name}: {check.observed}")
    return EXIT_OK if report.passed else EXIT_CONFIG


def schema_command(args: argparse.Namespace) -> int:
    print(json.dumps(SessionReport.model_json_schema(), indent=2))
    return EXIT_OK


def serve_command(args: argparse.Namespace) -> int:
    import uvicorn

    uvicorn.run(
        "app.main:app",
        host=settings.host,
        port=settings.port,
        reload=settings.debug,
        log_level="info"
    )
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qscdc", description="Controlled quantum direct communication simulator")
    parser.add_argument("--log-level", default=None, help="Override QSCDC_LOG_LEVEL")
    commands = parser.add_subparsers(dest="command", required=True)

    run = commands.add_parser("run", help="Run sessions from a JSON config")
    run.add_argument("--config", required=True, help="RunConfig JSON file")
    run.add_argument("--seed", type=int, default=None, help="Base seed; repetition i uses seed + i")
    run.add_argument("--reps", type=_positive_int, default=None)
    run.add_argument("--format", choices=["json", "csv", "text"], default=None)
    run.add_argument("--out", default=None, help="Output directory")
    run.add_argument("--workers", type=_positive_int, default=None)
    run.set_defaults(handler=run_command)

    sweep = commands.add_parser("sweep", help="Exact vs Monte-Carlo detection table")
    sweep.add_argument("--attacks", type=_csv_list(str), default=["none", "intercept-resend:Z", "ghz-coupling"])
    sweep.add_argument("--test-pairs", type=_positive_ints, default=[1, 4, 16, 64])
    sweep.add_argument("--reps", type=_positive_int, default=settings.sweep_reps)
    sweep.add_argument("--seed", type=int, default=0)
    sweep.add_argument("--out", default=None, help="Also write the table to this CSV file")
    sweep.set_defaults(handler=sweep_command)

    commands.add_parser("paper-check", help="Replay the worked examples").set_defaults(handler=paper_check_command)
    commands.add_parser("schema", help="Print the JSON schema of session reports").set_defaults(handler=schema_command)
    commands.add_parser("serve", help="Start the HTTP API").set_defaults(handler=serve_command)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    """Entry point; returns the process exit code (0 ok, 1 refused or failed, 2 I/O)"""
    args = build_parser().parse_args(argv)
    setup_logging(args.log_level)
    try:
        return args.handler(args)
    except (QscdcError, ValidationError) as e:
        logger.error(f"{args.command} refused: {e}")
        print(f"error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as e:
        logger.error(f"{args.command} failed on I/O: {e}")
        print(f"error: {e}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
