"""Main entry point for the retail feedback-loop simulator."""

from __future__ import annotations

import argparse
import sys
from collections.abc import Sequence
from pathlib import Path
from typing import NoReturn

from retail_feedback_loop.config import ExperimentConfig, load_experiment_config, parse_overrides
from retail_feedback_loop.errors import ConfigurationError


class _ArgumentParser(argparse.ArgumentParser):
    """Usage errors exit with the configuration exit code."""

    def error(self, message: str) -> NoReturn:
        self.print_usage(sys.stderr)
        self.exit(1, f"Error: {message}\n")


def _shared_flags() -> argparse.ArgumentParser:
    shared = argparse.ArgumentParser(add_help=False)
    shared.add_argument("--config", type=str, help="dotenv-style configuration file")
    shared.add_argument("--seed", type=int, help="top-level seed (SEED)")
    shared.add_argument("--out", type=str, help="output root (OUTPUT_ROOT)")
    shared.add_argument("--jobs", type=int, help="parallel sweep workers (JOBS)")
    mode = shared.add_mutually_exclusive_group()
    mode.add_argument(
        "--strict", dest="strict", action="store_true", default=None, help="fail on bad CSV rows"
    )
    mode.add_argument(
        "--lenient", dest="strict", action="store_false", help="skip bad CSV rows with a warning"
    )
    shared.add_argument(
        "--set",
        dest="assignments",
        action="append",
        default=[],
        metavar="KEY=VALUE",
        help="override any configuration key (repeatable)",
    )
    shared.add_argument("--verbose", "-v", action="store_true", help="debug output on stderr")
    return shared


def build_parser() -> argparse.ArgumentParser:
    """The ``retail-feedback-loop`` argument parser with one subcommand per mode."""
    parser = _ArgumentParser(
        prog="retail-feedback-loop",
        description="Simulate the user-recommender feedback loop in online retail.",
    )
    shared = _shared_flags()
    commands = parser.add_subparsers(dest="command", required=True, parser_class=_ArgumentParser)

    ingest = commands.add_parser("ingest", parents=[shared], help="load and filter a dataset")
    ingest.add_argument("--split", action="store_true", help="also write train/validation/test")

    evaluate = commands.add_parser(
        "evaluate", parents=[shared], help="offline accuracy of the recommenders"
    )
    evaluate.add_argument(
        "--model", action="append", dest="models", help="model to evaluate (repeatable)"
    )
    evaluate.add_argument(
        "--grid",
        action="append",
        default=[],
        metavar="MODEL.PARAM=V1,V2",
        help="hyperparameter values to search on the validation split (repeatable)",
    )

    simulate = commands.add_parser("simulate", parents=[shared], help="run one simulation")
    simulate.add_argument("--eta", type=float, help="adoption rate (ETA)")
    simulate.add_argument("--model", type=str, help="deployed recommender (MODEL_ID)")

    commands.add_parser("sweep", parents=[shared], help="eta x model x run grid")

    report = commands.add_parser("report", parents=[shared], help="plot-ready CSV bundle")
    report.add_argument(
        "--runs",
        type=str,
        help="directory holding run artifacts (defaults to <out>/runs)",
    )
    return parser


def _overrides(args: argparse.Namespace) -> dict[str, str]:
    """Flag values as configuration keys; dedicated flags win over ``--set``."""
    overrides = parse_overrides(args.assignments)
    flags = {
        "SEED": args.seed,
        "OUTPUT_ROOT": args.out,
        "JOBS": args.jobs,
        "STRICT": None if args.strict is None else str(args.strict).lower(),
        "ETA": getattr(args, "eta", None),
        "MODEL_ID": getattr(args, "model", None),
    }
    overrides.update({key: str(value) for key, value in flags.items() if value is not None})
    return overrides


def resolve_config(args: argparse.Namespace) -> ExperimentConfig:
    """Defaults < config file < ``--set`` < dedicated flags."""
    path = Path(args.config) if args.config else None
    return load_experiment_config(path, _overrides(args))


def run(argv: Sequence[str] | None = None) -> int:
    """Parse arguments, configure logging and run one command.

    Returns:
        Process exit code.
    """
    from retail_feedback_loop.logger import setup_logging

    args = build_parser().parse_args(argv)
    try:
        config = resolve_config(args)
    except ConfigurationError as e:
        print(f"Configuration error: {e}", file=sys.stderr)
        return e.exit_code

    setup_logging(config.output_root / "logs", verbose=args.verbose)

    # Import here to avoid loading the simulation stack for unrelated commands
    if args.command == "ingest":
        from retail_feedback_loop.ingest_mode import run_ingest_mode

        return run_ingest_mode(config, split=args.split)
    if args.command == "evaluate":
        from retail_feedback_loop.evaluate_mode import run_evaluate_mode

        return run_evaluate_mode(config, models=args.models, grid=args.grid)
    if args.command == "simulate":
        from retail_feedback_loop.simulate_mode import run_simulate_mode

        return run_simulate_mode(config)
    if args.command == "sweep":
        from retail_feedback_loop.simulate_mode import run_sweep_mode

        return run_sweep_mode(config)
    from retail_feedback_loop.report_mode import run_report_mode

    return run_report_mode(config, runs_root=args.runs)


def main() -> None:
    """Main entry point."""
    sys.exit(run())


if __name__ == "__main__":
    main()
