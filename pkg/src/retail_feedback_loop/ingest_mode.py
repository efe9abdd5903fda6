"""Ingest mode - load a dataset, apply the continuity filter and write the log."""

from __future__ import annotations

import sys
from pathlib import Path

from retail_feedback_loop.config import ExperimentConfig
from retail_feedback_loop.errors import SimulatorError
from retail_feedback_loop.ingestion import (
    EpochWindow,
    filter_active_users,
    load_raw_dataset,
    temporal_split,
    write_categories_csv,
    write_log_csv,
)
from retail_feedback_loop.interactions import InteractionLog
from retail_feedback_loop.logger import get_logger

logger = get_logger(__name__)

INGEST_DIR = "ingest"


def _print_counts(before: InteractionLog, after: InteractionLog) -> None:
    print(f"\n  {'':<10} {'users':>10} {'items':>10} {'events':>12}")
    print("-" * 46)
    for label, log in (("raw", before), ("filtered", after)):
        print(f"  {label:<10} {len(log.users):>10} {len(log.items):>10} {len(log):>12}")
    print("-" * 46)


def _write_split(filtered: InteractionLog, config: ExperimentConfig, out_dir: Path) -> None:
    window = EpochWindow(
        start_step=filtered.step_range[0],
        n_epochs=config.simulation.init_epochs,
        epoch_length=config.simulation.steps_per_epoch,
    )
    split = temporal_split(filtered, window)
    parts = {"train": split.train, "validation": split.validation, "test": split.test}
    for name, part in parts.items():
        write_log_csv(part, out_dir / f"{name}.csv")
        print(f"  {name:<10} {len(part):>10} events")


def run_ingest_mode(config: ExperimentConfig, split: bool = False) -> int:
    """Load, filter and (optionally) split the configured dataset.

    Args:
        config: Experiment configuration; the dataset section selects the input.
        split: Also write the train / validation / test logs of the first
            ``init_epochs`` epochs.

    Returns:
        Exit code (0 for success, non-zero for failure).
    """
    print("Ingest Mode")
    print("=" * 40)
    source = config.dataset.path or "synthetic generator"
    print(f"Source: {source}")

    out_dir = config.output_root / INGEST_DIR
    try:
        raw = load_raw_dataset(config)
        filtered = filter_active_users(raw, config.simulation.steps_per_epoch)
        _print_counts(raw, filtered)
        if len(filtered) == 0:
            print("\nWarning: no users are active in every epoch window", file=sys.stderr)
            return 2
        write_log_csv(filtered, out_dir / "interactions.csv")
        if filtered.categories:
            write_categories_csv(filtered.categories, out_dir / "categories.csv")
        print(f"\nWrote {out_dir / 'interactions.csv'}")
        if split:
            _write_split(filtered, config, out_dir)
        return 0
    except SimulatorError as e:
        print(f"\nError: {e}", file=sys.stderr)
        return e.exit_code
    except Exception as e:
        logger.exception("Ingest failed")
        print(f"\nError: {e}", file=sys.stderr)
        return 3
