"""Adoption-rate x model x repetition sweeps and their aggregate tables."""

from __future__ import annotations

from collections.abc import Sequence
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import pandas as pd

from retail_feedback_loop.artifacts import (
    FLOAT_FORMAT,
    METRIC_COLUMNS,
    metric_rows,
    run_dir_name,
    write_config_snapshot,
    write_run_artifacts,
)
from retail_feedback_loop.config.settings import MetricSettings, SimulationConfig
from retail_feedback_loop.interactions import ActivitySchedule, InteractionLog
from retail_feedback_loop.logger import get_logger
from retail_feedback_loop.rng import derive_run_seed
from retail_feedback_loop.simulation import run_simulation

logger = get_logger(__name__)

SUMMARY_FILE = "summary.csv"
AGGREGATE_FILE = "aggregate.csv"
HEADLINE_METRICS = ("mean_individual_gini", "collective_gini", "mean_jaccard")


@dataclass(frozen=True)
class SweepCell:
    """One (eta, model, run) combination and where its artifacts go."""

    eta: float
    model_id: str
    run: int
    seed: int
    directory: Path


@dataclass(frozen=True)
class CellOutcome:
    cell: SweepCell
    final_metrics: pd.DataFrame | None = None
    error: str | None = None

    @property
    def ok(self) -> bool:
        return self.error is None


@dataclass(frozen=True)
class SweepOutcome:
    outcomes: list[CellOutcome]
    summary: pd.DataFrame
    aggregate: pd.DataFrame

    @property
    def failures(self) -> list[CellOutcome]:
        return [o for o in self.outcomes if not o.ok]


def plan_cells(
    base: SimulationConfig,
    etas: Sequence[float],
    model_ids: Sequence[str],
    n_runs: int,
    output_root: Path,
) -> list[SweepCell]:
    """Enumerate the sweep grid with derived per-(eta, run) seeds."""
    return [
        SweepCell(
            eta=eta,
            model_id=model_id,
            run=run,
            seed=derive_run_seed(base.seed, eta, run),
            directory=output_root / "runs" / run_dir_name(eta, model_id, run),
        )
        for eta in etas
        for model_id in model_ids
        for run in range(n_runs)
    ]


def run_cell(
    cell: SweepCell,
    base: SimulationConfig,
    historical: InteractionLog,
    schedule: ActivitySchedule | None,
    metric_settings: MetricSettings,
) -> CellOutcome:
    """Run one combination end to end; failures are returned, not raised."""
    config = base.with_run(cell.eta, cell.model_id, cell.seed)
    try:
        write_config_snapshot(cell.directory, config)
        result = run_simulation(config, historical, schedule, metric_settings)
        write_run_artifacts(cell.directory, result, cell.run)
    except Exception as err:  # noqa: BLE001
        logger.exception("Run %s failed", cell.directory.name)
        return CellOutcome(cell, error=f"{type(err).__name__}: {err}")
    final = metric_rows(result.snapshots[-1:], cell.eta, cell.model_id, cell.run)
    return CellOutcome(cell, final_metrics=final)


def aggregate_table(summary: pd.DataFrame) -> pd.DataFrame:
    """Across-run mean and standard deviation of final metrics per (eta, model)."""
    grouped = summary.groupby(["eta", "model", "metric"], sort=True)["value"]
    table = grouped.agg(["mean", "std", "count"]).reset_index()
    table["std"] = table["std"].fillna(0.0)
    return table


def sweep(
    base: SimulationConfig,
    historical: InteractionLog,
    etas: Sequence[float],
    model_ids: Sequence[str],
    n_runs: int,
    output_root: Path,
    jobs: int = 1,
    schedule: ActivitySchedule | None = None,
    metric_settings: MetricSettings | None = None,
) -> SweepOutcome:
    """Run every (eta, model, run) combination and write the summaries.

    Runs that share eta and run index share their seed, so the eta = 0
    rows agree across models. Failed runs are recorded and skipped.

    Args:
        base: Configuration shared by all runs.
        historical: Historical log.
        etas: Adoption-rate grid.
        model_ids: Recommenders to compare.
        n_runs: Repetitions per (eta, model).
        output_root: Directory receiving ``runs/`` and the summary files.
        jobs: Worker processes; 1 runs in-process.
        schedule: Activity schedule; defaults to the empirical one.
        metric_settings: Jaccard sampling options.

    Returns:
        Per-cell outcomes plus the summary and aggregate tables.
    """
    metric_settings = metric_settings or MetricSettings()
    cells = plan_cells(base, etas, model_ids, n_runs, output_root)
    logger.info(
        "Sweep: %d runs (%d etas x %d models x %d runs)",
        len(cells),
        len(etas),
        len(model_ids),
        n_runs,
    )

    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            futures = [
                pool.submit(run_cell, cell, base, historical, schedule, metric_settings)
                for cell in cells
            ]
            outcomes = [f.result() for f in futures]
    else:
        outcomes = [run_cell(c, base, historical, schedule, metric_settings) for c in cells]

    frames = [o.final_metrics for o in outcomes if o.final_metrics is not None]
    summary = (
        pd.concat(frames, ignore_index=True)
        if frames
        else pd.DataFrame(columns=METRIC_COLUMNS)
    )
    summary = summary.sort_values(["eta", "model", "run", "metric"], kind="stable").reset_index(
        drop=True
    )
    aggregate = aggregate_table(summary) if frames else pd.DataFrame()

    output_root.mkdir(parents=True, exist_ok=True)
    summary.to_csv(
        output_root / SUMMARY_FILE, index=False, float_format=FLOAT_FORMAT, lineterminator="\n"
    )
    aggregate.to_csv(
        output_root / AGGREGATE_FILE, index=False, float_format=FLOAT_FORMAT, lineterminator="\n"
    )
    failed = [o for o in outcomes if not o.ok]
    if failed:
        logger.warning("Sweep: %d of %d runs failed", len(failed), len(outcomes))
    return SweepOutcome(outcomes=outcomes, summary=summary, aggregate=aggregate)
