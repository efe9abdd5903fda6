"""Top-k ranking evaluation and hyperparameter grid search."""

from __future__ import annotations

import itertools
import math
from collections.abc import Collection, Mapping, Sequence
from dataclasses import dataclass
from typing import Any

import pandas as pd

from retail_feedback_loop.config.constants import EVAL_K
from retail_feedback_loop.config.settings import ModelSettings
from retail_feedback_loop.errors import ConfigurationError, DataError, ModelError, SimulatorError
from retail_feedback_loop.interactions import InteractionLog
from retail_feedback_loop.logger import get_logger
from retail_feedback_loop.recommenders import ScoringModel, create_model
from retail_feedback_loop.rng import hash_to_u64

logger = get_logger(__name__)

METRIC_NAMES = ("ndcg", "precision", "recall", "hit")


def dcg(ranked: Sequence[str], relevant: Collection[str]) -> float:
    return sum(1.0 / math.log2(rank + 2) for rank, item in enumerate(ranked) if item in relevant)


def ideal_dcg(n_relevant: int, k: int) -> float:
    return sum(1.0 / math.log2(rank + 2) for rank in range(min(n_relevant, k)))


def ndcg_at_k(ranked: Sequence[str], relevant: Collection[str], k: int) -> float:
    """Binary-gain nDCG@k; the ideal DCG covers min(|relevant|, k) hits."""
    ideal = ideal_dcg(len(relevant), k)
    return dcg(ranked[:k], relevant) / ideal if ideal else 0.0


def hits_at_k(ranked: Sequence[str], relevant: Collection[str], k: int) -> int:
    return sum(1 for item in ranked[:k] if item in relevant)


@dataclass(frozen=True)
class RankingMetrics:
    """User-averaged top-k accuracy."""

    ndcg: float
    precision: float
    recall: float
    hit: float
    n_users: int
    skipped_users: int = 0

    def as_dict(self) -> dict[str, float]:
        return {name: float(getattr(self, name)) for name in METRIC_NAMES}


def evaluate(
    model: ScoringModel,
    train: InteractionLog,
    test: InteractionLog,
    k: int = EVAL_K,
) -> RankingMetrics:
    """Average nDCG, precision, recall and hit rate at k over test users.

    Relevance is binary (items bought in ``test``). Recommendation lists
    exclude the user's items in ``train``. Test users unknown to ``train``
    are skipped and counted.

    Raises:
        DataError: If no test user can be evaluated.
    """
    history = train.item_sets()
    relevant_sets = {u: items for u, items in test.item_sets().items() if items}
    known = set(train.active_users())
    evaluable = sorted(u for u in relevant_sets if u in known)
    skipped = len(relevant_sets) - len(evaluable)
    if skipped:
        logger.info("Evaluation skipped %d test user(s) unknown to the training log", skipped)
    if not evaluable:
        raise DataError("no evaluable users in the test split")

    lists = model.top_k_all(k, users=evaluable, exclude={u: history[u] for u in evaluable})
    totals = dict.fromkeys(METRIC_NAMES, 0.0)
    for user in evaluable:
        ranked = lists[user].items
        relevant = relevant_sets[user]
        hits = hits_at_k(ranked, relevant, k)
        totals["ndcg"] += ndcg_at_k(ranked, relevant, k)
        totals["precision"] += hits / k
        totals["recall"] += hits / len(relevant)
        totals["hit"] += 1.0 if hits else 0.0
    n = len(evaluable)
    return RankingMetrics(
        ndcg=totals["ndcg"] / n,
        precision=totals["precision"] / n,
        recall=totals["recall"] / n,
        hit=totals["hit"] / n,
        n_users=n,
        skipped_users=skipped,
    )


@dataclass(frozen=True)
class GridSearchResult:
    best: dict[str, Any]
    best_metrics: RankingMetrics
    table: pd.DataFrame


def grid_points(grid: Mapping[str, Sequence[Any]]) -> list[dict[str, Any]]:
    """Cartesian product of the grid in key order, last key varying fastest."""
    keys = list(grid)
    return [dict(zip(keys, values, strict=True)) for values in itertools.product(*grid.values())]


def grid_search(
    model_id: str,
    grid: Mapping[str, Sequence[Any]],
    train: InteractionLog,
    validation: InteractionLog,
    seed: int = 0,
    settings: ModelSettings | None = None,
    k: int = EVAL_K,
) -> GridSearchResult:
    """Pick the hyperparameters with the best validation nDCG@k.

    Ties keep the earliest grid point. Points whose training or evaluation
    fails are recorded in the table with their error and skipped.

    Raises:
        ConfigurationError: If the grid is empty.
        ModelError: If every point fails.
    """
    if not grid or any(len(values) == 0 for values in grid.values()):
        raise ConfigurationError("grid search needs at least one value per parameter")

    rows: list[dict[str, Any]] = []
    best: tuple[dict[str, Any], RankingMetrics] | None = None
    for index, params in enumerate(grid_points(grid)):
        point_seed = hash_to_u64(f"{seed}:grid:{index}") % (2**32)
        try:
            model = create_model(model_id, settings, **params).train(train, seed=point_seed)
            metrics = evaluate(model, train, validation, k=k)
        except (SimulatorError, ValueError) as err:
            logger.warning("Grid point %s failed: %s", params, err)
            rows.append({**params, **dict.fromkeys(METRIC_NAMES, float("nan")), "error": str(err)})
            continue
        rows.append({**params, **metrics.as_dict(), "error": ""})
        if best is None or metrics.ndcg > best[1].ndcg:
            best = (params, metrics)

    table = pd.DataFrame(rows, columns=[*grid, *METRIC_NAMES, "error"])
    if best is None:
        raise ModelError(f"every grid point failed for {model_id}")
    logger.info("Grid search for %s: best %s (ndcg@%d=%.4f)", model_id, best[0], k, best[1].ndcg)
    return GridSearchResult(best=best[0], best_metrics=best[1], table=table)
