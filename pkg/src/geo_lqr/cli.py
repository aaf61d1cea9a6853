import argparse
import json
import sys
from pathlib import Path

from loguru import logger

from geo_lqr.errors import GeoLqrError
from geo_lqr.harness import parse_config, run

LOG_FORMAT = "{time:HH:mm:ss} | {level: <7} | {name}:{function} - {message}"


def _configure_logging(verbose: bool) -> None:
    logger.remove()
    logger.add(sys.stderr, level="DEBUG" if verbose else "INFO", format=LOG_FORMAT)
    logger.enable("geo_lqr")


def _report_error(e: GeoLqrError) -> int:
    line = {"error": e.reason, "message": str(e), "field": getattr(e, "field", None)}
    print(json.dumps(line), file=sys.stderr)
    return e.exit_code


def execute(args) -> int:
    """Run one parsed invocation and return the process exit code."""
    try:
        text = Path(args.config).read_text(encoding="utf-8")
    except OSError as e:
        print(
            json.dumps({"error": "ParseError", "message": str(e), "field": None}),
            file=sys.stderr,
        )
        return 2
    try:
        cfg = parse_config(text, command=args.command)
        summary = run(cfg, args.out)
    except GeoLqrError as e:
        return _report_error(e)

    if args.command == "gains":
        print(f"kP={summary.gains['kP']:.4f} kD={summary.gains['kD']:.4f}")
    print(summary.json())
    if args.command == "check" and not summary.details["passed"]:
        return 1
    return 0


def main(argv=None):
    parser = argparse.ArgumentParser(prog="geo-lqr", description="geo-lqr CLI")
    subparsers = parser.add_subparsers(dest="command", required=True)

    for name, help_text in (
        ("gains", "Solve the Riccati equation and print (kP, kD)"),
        ("regulate", "Simulate attitude regulation to a fixed goal"),
        ("track", "Simulate tracking of a polynomial reference"),
        ("avoid", "Solve an avoidance or finite-time regulation BVP"),
        ("check", "Run the built-in invariant suite"),
    ):
        sub = subparsers.add_parser(name, help=help_text)
        sub.add_argument("-c", "--config", required=True, help="scenario JSON file")
        sub.add_argument("-o", "--out", default=None, help="output directory")
        sub.add_argument("-v", "--verbose", action="store_true")

    args = parser.parse_args(argv)
    _configure_logging(args.verbose)
    sys.exit(execute(args))


if __name__ == "__main__":
    main()
