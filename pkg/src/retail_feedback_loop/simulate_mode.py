"""Simulate and sweep modes - run the feedback loop and write run artifacts."""

from __future__ import annotations

import sys
from collections.abc import Sequence

import pandas as pd

from retail_feedback_loop.config import ExperimentConfig
from retail_feedback_loop.errors import SimulatorError
from retail_feedback_loop.ingestion import load_dataset
from retail_feedback_loop.logger import get_logger
from retail_feedback_loop.sweep import HEADLINE_METRICS, SweepOutcome, sweep

logger = get_logger(__name__)


def format_aggregate(aggregate: pd.DataFrame) -> list[str]:
    """Rows of ``eta  model  metric mean +- sd`` for the headline metrics."""
    lines = [f"  {'eta':>5}  {'model':<10}" + "".join(f"{m:>26}" for m in HEADLINE_METRICS)]
    lines.append("-" * len(lines[0]))
    if aggregate.empty:
        return lines
    headline = aggregate[aggregate["metric"].isin(HEADLINE_METRICS)]
    for (eta, model), group in headline.groupby(["eta", "model"], sort=True):
        by_metric = group.set_index("metric")
        cells = "".join(
            f"{by_metric.at[m, 'mean']:>16.4f} +- {by_metric.at[m, 'std']:<6.4f}"
            if m in by_metric.index
            else f"{'n/a':>26}"
            for m in HEADLINE_METRICS
        )
        lines.append(f"  {eta:>5.2f}  {model:<10}{cells}")
    return lines


def _run(
    config: ExperimentConfig,
    etas: Sequence[float],
    model_ids: Sequence[str],
    n_runs: int,
) -> int:
    try:
        history = load_dataset(config)
        outcome: SweepOutcome = sweep(
            config.simulation,
            history,
            etas,
            model_ids,
            n_runs,
            config.output_root,
            jobs=config.jobs,
            metric_settings=config.metrics,
        )
    except SimulatorError as e:
        print(f"\nError: {e}", file=sys.stderr)
        return e.exit_code
    except Exception as e:
        logger.exception("Simulation failed")
        print(f"\nError: {e}", file=sys.stderr)
        return 3

    print()
    for line in format_aggregate(outcome.aggregate):
        print(line)

    failures = outcome.failures
    if failures:
        print(f"\n{len(failures)} of {len(outcome.outcomes)} run(s) failed:", file=sys.stderr)
        for failed in failures:
            print(f"  {failed.cell.directory.name}: {failed.error}", file=sys.stderr)
    if len(failures) == len(outcome.outcomes):
        return 3
    print(f"\nArtifacts in {config.output_root / 'runs'}")
    return 0


def run_simulate_mode(config: ExperimentConfig) -> int:
    """Run one simulation with the configured ETA and MODEL_ID.

    Returns:
        Exit code (0 for success, non-zero for failure).
    """
    print("Simulate Mode")
    print("=" * 40)
    simulation = config.simulation
    print(f"eta={simulation.eta:.2f} model={simulation.model_id} seed={simulation.seed}")
    return _run(config, [simulation.eta], [simulation.model_id], 1)


def run_sweep_mode(config: ExperimentConfig) -> int:
    """Run every SWEEP_ETAS x SWEEP_MODELS x SWEEP_RUNS combination.

    Returns:
        Exit code (0 unless every run failed or the setup failed).
    """
    print("Sweep Mode")
    print("=" * 40)
    grid = config.sweep
    print(
        f"{len(grid.etas)} eta value(s) x {len(grid.models)} model(s) x {grid.runs} run(s), "
        f"{config.jobs} job(s)"
    )
    return _run(config, grid.etas, grid.models, grid.runs)
