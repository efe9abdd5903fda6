"""Global popularity recommender."""

from __future__ import annotations

import numpy as np

from retail_feedback_loop.interactions import InteractionLog
from retail_feedback_loop.recommenders.base import FloatArray, IntArray, ScoringModel


class MostPop(ScoringModel):
    """Scores every item by its training-log strength s_i, identically for all users."""

    model_id = "mostpop"
    personalized = False

    def __init__(self) -> None:
        super().__init__()
        self._strength: FloatArray = np.zeros(0)

    def _fit(self, log: InteractionLog, seed: int) -> None:
        self._strength = log.strengths().astype(np.float64)

    def _score_rows(self, rows: IntArray) -> FloatArray:
        return np.broadcast_to(self._strength, (len(rows), len(self._strength))).copy()
