"""Evaluate mode - offline top-k accuracy of the recommenders on a temporal split."""

from __future__ import annotations

import sys
from collections.abc import Sequence
from typing import Any

import pandas as pd

from retail_feedback_loop.config import ExperimentConfig
from retail_feedback_loop.config.constants import EVAL_K
from retail_feedback_loop.errors import ConfigurationError, DataError, ModelError, SimulatorError
from retail_feedback_loop.evaluation import METRIC_NAMES, evaluate, grid_search
from retail_feedback_loop.ingestion import EpochWindow, Split, load_dataset, temporal_split
from retail_feedback_loop.logger import get_logger
from retail_feedback_loop.recommenders import create_model
from retail_feedback_loop.rng import RunStreams

logger = get_logger(__name__)

EVALUATION_FILE = "evaluation.csv"


def _parse_value(raw: str) -> Any:
    for cast in (int, float):
        try:
            return cast(raw)
        except ValueError:
            continue
    return raw


def parse_grid(entries: Sequence[str]) -> dict[str, dict[str, list[Any]]]:
    """Parse ``MODEL.PARAM=V1,V2`` entries into per-model grids.

    Raises:
        ConfigurationError: On a malformed entry.
    """
    grids: dict[str, dict[str, list[Any]]] = {}
    for entry in entries:
        key, sep, values = entry.partition("=")
        model_id, dot, param = key.strip().partition(".")
        if not sep or not dot or not param or not values.strip():
            raise ConfigurationError(f"expected MODEL.PARAM=V1,V2 for --grid, got {entry!r}")
        grids.setdefault(model_id, {})[param] = [
            _parse_value(v.strip()) for v in values.split(",") if v.strip()
        ]
    return grids


def _evaluate_model(
    model_id: str,
    split: Split,
    config: ExperimentConfig,
    grid: dict[str, list[Any]] | None,
    seed: int,
) -> dict[str, Any]:
    params: dict[str, Any] = {}
    settings = config.simulation.models
    if grid:
        result = grid_search(model_id, grid, split.train, split.validation, seed, settings)
        params = result.best
    model = create_model(model_id, settings, **params).train(split.train, seed=seed)
    metrics = evaluate(model, split.train, split.test, k=EVAL_K)
    return {
        "model": model_id,
        **metrics.as_dict(),
        "users": metrics.n_users,
        "params": ";".join(f"{k}={v}" for k, v in sorted(params.items())),
    }


def _print_table(table: pd.DataFrame) -> None:
    header = "".join(f"{name + '@' + str(EVAL_K):>12}" for name in METRIC_NAMES)
    print(f"\n  {'Model':<10}{header}")
    print("-" * (12 + 12 * len(METRIC_NAMES)))
    for row in table.itertuples(index=False):
        values = "".join(f"{getattr(row, name):>12.4f}" for name in METRIC_NAMES)
        print(f"  {row.model:<10}{values}")
    print("-" * (12 + 12 * len(METRIC_NAMES)))


def run_evaluate_mode(
    config: ExperimentConfig,
    models: Sequence[str] | None = None,
    grid: Sequence[str] = (),
) -> int:
    """Train each requested model on the first epochs and score it on the test epoch.

    The first ``init_epochs`` epochs of the history are split into training,
    validation (used by grid search) and test epochs.

    Args:
        config: Experiment configuration.
        models: Model identifiers; defaults to the sweep models.
        grid: ``MODEL.PARAM=V1,V2`` hyperparameter grid entries.

    Returns:
        Exit code (0 if at least one model was evaluated).
    """
    print("Evaluate Mode")
    print("=" * 40)
    model_ids = list(models or config.sweep.models)
    try:
        grids = parse_grid(grid)
        history = load_dataset(config)
        window = EpochWindow(
            start_step=history.step_range[0],
            n_epochs=config.simulation.init_epochs,
            epoch_length=config.simulation.steps_per_epoch,
        )
        split = temporal_split(history, window)
        if len(split.test) == 0:
            raise DataError("the test split is empty")
    except SimulatorError as e:
        print(f"\nError: {e}", file=sys.stderr)
        return e.exit_code
    except Exception as e:
        logger.exception("Evaluation setup failed")
        print(f"\nError: {e}", file=sys.stderr)
        return 3

    seed = RunStreams(config.simulation.seed).training_seed(0)
    rows: list[dict[str, Any]] = []
    failures: list[SimulatorError] = []
    for model_id in model_ids:
        try:
            rows.append(_evaluate_model(model_id, split, config, grids.get(model_id), seed))
        except SimulatorError as e:
            logger.warning("Evaluation of %s failed: %s", model_id, e)
            print(f"  {model_id}: failed ({e})", file=sys.stderr)
            failures.append(e)
        except Exception as e:
            logger.exception("Evaluation of %s failed", model_id)
            print(f"  {model_id}: failed ({e})", file=sys.stderr)
            failures.append(ModelError(f"{type(e).__name__}: {e}"))

    if not rows:
        error = failures[-1] if failures else ModelError("no models to evaluate")
        print(f"\nError: every model failed ({error})", file=sys.stderr)
        return error.exit_code

    table = pd.DataFrame(rows).sort_values(["ndcg", "model"], ascending=[False, True])
    table = table.reset_index(drop=True)
    _print_table(table)
    config.output_root.mkdir(parents=True, exist_ok=True)
    path = config.output_root / EVALUATION_FILE
    table.to_csv(path, index=False, float_format="%.12g", lineterminator="\n")
    print(f"\nWrote {path}")
    return 0
