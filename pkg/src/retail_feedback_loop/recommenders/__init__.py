"""Recommender models behind the ScoringModel interface."""

from __future__ import annotations

from typing import Any

from retail_feedback_loop.config.settings import MODEL_IDS, ModelSettings
from retail_feedback_loop.errors import ConfigurationError

from .base import RankedList, ScoringModel, normalize_scores
from .baselines import CollectiveRandom, UserPop
from .bpr import BPR
from .itemknn import ItemKNN
from .mostpop import MostPop


def create_model(
    model_id: str,
    settings: ModelSettings | None = None,
    **params: Any,
) -> ScoringModel:
    """Instantiate a recommender by identifier.

    Args:
        model_id: One of mostpop, itemknn, bpr, random, userpop.
        settings: Hyperparameter defaults; ``params`` override single values.
        **params: Hyperparameters named as in the model constructor.

    Raises:
        ConfigurationError: For an unknown identifier or hyperparameter.
    """
    settings = settings or ModelSettings()
    try:
        if model_id == "mostpop":
            return MostPop(**params)
        if model_id == "random":
            return CollectiveRandom(**params)
        if model_id == "userpop":
            return UserPop(**params)
        if model_id == "itemknn":
            return ItemKNN(**{"neighborhood_size": settings.itemknn_neighborhood, **params})
        if model_id == "bpr":
            defaults = {
                "factors": settings.bpr_factors,
                "learning_rate": settings.bpr_learning_rate,
                "regularization": settings.bpr_regularization,
                "epochs": settings.bpr_epochs,
                "negatives": settings.bpr_negatives,
                "batch_size": settings.bpr_batch_size,
            }
            return BPR(**{**defaults, **params})
    except TypeError as err:
        raise ConfigurationError(f"invalid hyperparameter for {model_id}: {err}") from err
    raise ConfigurationError(f"unknown model {model_id!r}; expected one of {', '.join(MODEL_IDS)}")


__all__ = [
    "BPR",
    "CollectiveRandom",
    "ItemKNN",
    "MostPop",
    "RankedList",
    "ScoringModel",
    "UserPop",
    "create_model",
    "normalize_scores",
]
