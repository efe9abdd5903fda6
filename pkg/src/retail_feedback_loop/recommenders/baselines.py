"""Reference baselines: collective random and individual popularity."""

from __future__ import annotations

import numpy as np

from retail_feedback_loop.interactions import InteractionLog
from retail_feedback_loop.recommenders.base import FloatArray, IntArray, ScoringModel


class CollectiveRandom(ScoringModel):
    """One random score per item, drawn at training time and shared by all users."""

    model_id = "random"
    personalized = False

    def __init__(self) -> None:
        super().__init__()
        self._scores: FloatArray = np.zeros(0)

    def _fit(self, log: InteractionLog, seed: int) -> None:
        self._scores = np.random.default_rng(seed).random(len(log.items))

    def _score_rows(self, rows: IntArray) -> FloatArray:
        return np.broadcast_to(self._scores, (len(rows), len(self._scores))).copy()


class UserPop(ScoringModel):
    """Individual popularity: the user's own purchase count per item.

    Global strength, scaled below 1, orders items the user never bought
    and breaks ties among bought ones.
    """

    model_id = "userpop"

    def __init__(self) -> None:
        super().__init__()
        self._prior: FloatArray = np.zeros(0)
        self._counts: FloatArray = np.zeros((0, 0))

    def _fit(self, log: InteractionLog, seed: int) -> None:
        strength = log.strengths().astype(np.float64)
        self._prior = strength / (strength.max() + 1.0)
        counts = np.zeros((len(log.users), len(log.items)))
        np.add.at(counts, (log.user_idx, log.item_idx), log.quantities)
        self._counts = counts

    def _score_rows(self, rows: IntArray) -> FloatArray:
        return self._counts[rows] + self._prior
