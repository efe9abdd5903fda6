"""Bayesian personalized ranking matrix factorization trained by mini-batch SGD."""

from __future__ import annotations

import numpy as np
from scipy.special import expit

from retail_feedback_loop.config import constants
from retail_feedback_loop.errors import ModelError
from retail_feedback_loop.interactions import InteractionLog
from retail_feedback_loop.logger import get_logger
from retail_feedback_loop.metrics import incidence_matrix
from retail_feedback_loop.recommenders.base import FloatArray, IntArray, ScoringModel

logger = get_logger(__name__)

INIT_SCALE = 0.1


def triplet_objective(
    v_u: FloatArray,
    v_i: FloatArray,
    v_j: FloatArray,
    b_i: float,
    b_j: float,
    regularization: float,
) -> float:
    """ln sigma(x_ui - x_uj) - reg * ||params||^2 with x = bias + <v_u, v_item>."""
    d = (b_i - b_j) + float(np.dot(v_u, v_i - v_j))
    penalty = float(v_u @ v_u + v_i @ v_i + v_j @ v_j) + b_i**2 + b_j**2
    return -float(np.logaddexp(0.0, -d)) - regularization * penalty


def triplet_gradients(
    v_u: FloatArray,
    v_i: FloatArray,
    v_j: FloatArray,
    b_i: float,
    b_j: float,
    regularization: float,
) -> tuple[FloatArray, FloatArray, FloatArray, float, float]:
    """Analytic gradient of ``triplet_objective`` w.r.t. (v_u, v_i, v_j, b_i, b_j)."""
    d = (b_i - b_j) + float(np.dot(v_u, v_i - v_j))
    g = float(expit(-d))
    two_reg = 2.0 * regularization
    return (
        g * (v_i - v_j) - two_reg * v_u,
        g * v_u - two_reg * v_i,
        -g * v_u - two_reg * v_j,
        g - two_reg * b_i,
        -g - two_reg * b_j,
    )


class BPR(ScoringModel):
    """Latent factors plus item bias; score(u, i) = b_i + <v_u, v_i>.

    Each pass visits every observed (user, item) pair in random order,
    pairs it with ``negatives`` items the user never bought and applies
    gradient ascent on the per-triplet objective in mini-batches.
    """

    model_id = "bpr"

    def __init__(
        self,
        factors: int = constants.BPR_FACTORS,
        learning_rate: float = constants.BPR_LEARNING_RATE,
        regularization: float = constants.BPR_REGULARIZATION,
        epochs: int = constants.BPR_EPOCHS,
        negatives: int = constants.BPR_NEGATIVES,
        batch_size: int = constants.BPR_BATCH_SIZE,
    ) -> None:
        super().__init__()
        if min(factors, epochs, negatives, batch_size) < 1 or learning_rate <= 0:
            raise ModelError("BPR hyperparameters must be positive")
        if regularization < 0:
            raise ModelError("BPR regularization must be non-negative")
        self.factors = factors
        self.learning_rate = learning_rate
        self.regularization = regularization
        self.epochs = epochs
        self.negatives = negatives
        self.batch_size = batch_size
        self.user_factors: FloatArray = np.zeros((0, factors))
        self.item_factors: FloatArray = np.zeros((0, factors))
        self.item_bias: FloatArray = np.zeros(0)
        self.skipped_users = 0

    def _fit(self, log: InteractionLog, seed: int) -> None:
        rng = np.random.default_rng(seed)
        n_users, n_items = len(log.users), len(log.items)
        incidence = incidence_matrix(log).tocoo()
        pos_u = incidence.row.astype(np.int64)
        pos_i = incidence.col.astype(np.int64)
        order = np.lexsort((pos_i, pos_u))
        pos_u, pos_i = pos_u[order], pos_i[order]

        per_user = np.bincount(pos_u, minlength=n_users)
        saturated = per_user >= n_items
        self.skipped_users = int(saturated.sum())
        if self.skipped_users:
            logger.info("BPR: skipped %d user(s) with full-catalog history", self.skipped_users)
        usable = ~saturated[pos_u]
        pos_u, pos_i = pos_u[usable], pos_i[usable]
        observed = np.sort(incidence.row.astype(np.int64) * n_items + incidence.col)

        self.user_factors = rng.normal(0.0, INIT_SCALE, size=(n_users, self.factors))
        self.item_factors = rng.normal(0.0, INIT_SCALE, size=(n_items, self.factors))
        self.item_bias = np.zeros(n_items)
        if len(pos_u) == 0:
            logger.warning("BPR: no trainable (user, item) pairs")
            return

        for _ in range(self.epochs):
            shuffle = rng.permutation(len(pos_u))
            users = np.repeat(pos_u[shuffle], self.negatives)
            items = np.repeat(pos_i[shuffle], self.negatives)
            negs = self._sample_negatives(users, observed, n_items, rng)
            for start in range(0, len(users), self.batch_size):
                stop = start + self.batch_size
                self._step(users[start:stop], items[start:stop], negs[start:stop])

    @staticmethod
    def _sample_negatives(
        users: IntArray,
        observed: IntArray,
        n_items: int,
        rng: np.random.Generator,
    ) -> IntArray:
        """Uniform items each user never bought, by rejection against sorted pair keys."""
        negs = rng.integers(0, n_items, size=len(users))
        pending = np.arange(len(users))
        while len(pending):
            keys = users[pending] * n_items + negs[pending]
            pos = np.searchsorted(observed, keys)
            hit = (pos < len(observed)) & (observed[np.minimum(pos, len(observed) - 1)] == keys)
            pending = pending[hit]
            negs[pending] = rng.integers(0, n_items, size=len(pending))
        return negs

    def _step(self, u: IntArray, i: IntArray, j: IntArray) -> None:
        vu = self.user_factors[u]
        vi = self.item_factors[i]
        vj = self.item_factors[j]
        bi = self.item_bias[i]
        bj = self.item_bias[j]
        d = bi - bj + np.einsum("nf,nf->n", vu, vi - vj)
        g = expit(-d)[:, None]
        two_reg = 2.0 * self.regularization
        lr = self.learning_rate
        np.add.at(self.user_factors, u, lr * (g * (vi - vj) - two_reg * vu))
        np.add.at(self.item_factors, i, lr * (g * vu - two_reg * vi))
        np.add.at(self.item_factors, j, lr * (-g * vu - two_reg * vj))
        np.add.at(self.item_bias, i, lr * (g[:, 0] - two_reg * bi))
        np.add.at(self.item_bias, j, lr * (-g[:, 0] - two_reg * bj))

    def _score_rows(self, rows: IntArray) -> FloatArray:
        return np.asarray(self.user_factors[rows] @ self.item_factors.T + self.item_bias)
