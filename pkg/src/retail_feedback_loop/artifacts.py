"""Run artifact directories: config snapshot, logs and metric tables."""

from __future__ import annotations

from collections.abc import Iterable
from dataclasses import dataclass
from pathlib import Path

import pandas as pd

from retail_feedback_loop.config.settings import SimulationConfig, load_experiment_config
from retail_feedback_loop.errors import DataError
from retail_feedback_loop.ingestion import read_log_csv, write_categories_csv, write_log_csv
from retail_feedback_loop.interactions import InteractionLog
from retail_feedback_loop.logger import get_logger
from retail_feedback_loop.simulation import EpochSnapshot, SimulationResult, TrainingEvent

logger = get_logger(__name__)

CONFIG_FILE = "config.env"
LOG_FILE = "interactions.csv"
CATEGORIES_FILE = "categories.csv"
METRICS_FILE = "metrics.csv"
TRAINING_FILE = "training_events.csv"
METRIC_COLUMNS = ["epoch", "eta", "model", "run", "metric", "value"]
FLOAT_FORMAT = "%.12g"


def run_dir_name(eta: float, model_id: str, run: int) -> str:
    return f"eta={eta:.2f}__model={model_id}__run={run}"


def write_config_snapshot(directory: Path, config: SimulationConfig) -> Path:
    """Write ``config.env`` before any computation so failed runs stay diagnosable."""
    directory.mkdir(parents=True, exist_ok=True)
    path = directory / CONFIG_FILE
    path.write_text("\n".join(config.to_env_lines()) + "\n", encoding="utf-8")
    return path


def metric_rows(
    snapshots: Iterable[EpochSnapshot], eta: float, model_id: str, run: int
) -> pd.DataFrame:
    rows = [
        {
            "epoch": s.epoch,
            "eta": eta,
            "model": model_id,
            "run": run,
            "metric": name,
            "value": value,
        }
        for s in snapshots
        for name, value in s.values().items()
    ]
    return pd.DataFrame(rows, columns=METRIC_COLUMNS)


def training_rows(events: Iterable[TrainingEvent]) -> pd.DataFrame:
    rows = []
    for e in events:
        served = e.served_metrics.as_dict() if e.served_metrics is not None else {}
        rows.append(
            {
                "epoch": e.epoch,
                "window_start": e.window[0],
                "window_end": e.window[1],
                "n_events": e.n_events,
                "seed": e.seed,
                "model": e.model_id,
                "ndcg": served.get("ndcg"),
                "precision": served.get("precision"),
                "recall": served.get("recall"),
                "hit": served.get("hit"),
            }
        )
    return pd.DataFrame(rows)


def write_run_artifacts(directory: Path, result: SimulationResult, run: int) -> None:
    """Write log, per-epoch metrics and training events of a finished run."""
    config = result.config
    write_log_csv(result.log, directory / LOG_FILE)
    if result.log.categories:
        write_categories_csv(result.log.categories, directory / CATEGORIES_FILE)
    metric_rows(result.snapshots, config.eta, config.model_id, run).to_csv(
        directory / METRICS_FILE, index=False, float_format=FLOAT_FORMAT, lineterminator="\n"
    )
    training_rows(result.training_events).to_csv(
        directory / TRAINING_FILE, index=False, float_format=FLOAT_FORMAT, lineterminator="\n"
    )
    logger.debug("Wrote artifacts to %s", directory)


@dataclass(frozen=True)
class RunArtifact:
    """A run directory read back from disk."""

    directory: Path
    config: SimulationConfig
    log: InteractionLog
    metrics: pd.DataFrame

    @property
    def run(self) -> int:
        return int(self.metrics["run"].iloc[0]) if len(self.metrics) else 0

    def init_log(self) -> InteractionLog:
        """The historical part of the log (events before the first simulated step)."""
        end = self.config.init_end_step - 1
        return self.log.select(self.log.steps <= end, step_range=(0, end))


def _require(path: Path) -> Path:
    if not path.exists():
        raise DataError(f"missing artifact: {path}")
    return path


def read_run_artifact(directory: Path) -> RunArtifact:
    """Load a run directory.

    Raises:
        DataError: If any required file is missing.
    """
    config = load_experiment_config(_require(directory / CONFIG_FILE)).simulation
    log = read_log_csv(
        _require(directory / LOG_FILE), categories_path=directory / CATEGORIES_FILE
    )
    # Ingested and synthetic logs start at step 0
    log = log.with_step_range((0, config.final_step))
    metrics = pd.read_csv(_require(directory / METRICS_FILE))
    return RunArtifact(directory=directory, config=config, log=log, metrics=metrics)


def find_run_dirs(root: Path) -> list[Path]:
    """Run directories below ``root`` (or ``root`` itself), sorted by name.

    Raises:
        DataError: If the root does not exist or holds no runs.
    """
    if not root.exists():
        raise DataError(f"missing artifact: {root}")
    if (root / CONFIG_FILE).exists():
        return [root]
    runs = sorted(p.parent for p in root.rglob(CONFIG_FILE))
    if not runs:
        raise DataError(f"no run artifacts under {root}")
    return runs
