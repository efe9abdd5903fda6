"""Item-based collaborative filtering with cosine similarity."""

from __future__ import annotations

import numpy as np
from scipy import sparse

from retail_feedback_loop.config.constants import ITEMKNN_NEIGHBORHOOD
from retail_feedback_loop.errors import ModelError
from retail_feedback_loop.interactions import InteractionLog
from retail_feedback_loop.metrics import incidence_matrix
from retail_feedback_loop.recommenders.base import FloatArray, IntArray, ScoringModel


def cosine_similarity(incidence: sparse.csr_matrix) -> sparse.csr_matrix:
    """Item-item cosine |U_i & U_j| / sqrt(|U_i| |U_j|) of a binary user x item matrix.

    Items without purchasers have zero similarity to everything.
    """
    co = (incidence.T @ incidence).tocsr()
    counts = co.diagonal()
    with np.errstate(divide="ignore"):
        inv_norm = np.where(counts > 0, 1.0 / np.sqrt(counts), 0.0)
    scale = sparse.diags(inv_norm)
    return (scale @ co @ scale).tocsr()


def top_neighbors(similarity: sparse.csr_matrix, size: int) -> sparse.csr_matrix:
    """Keep, for each item row, its ``size`` most similar other items.

    The item itself is never its own neighbour; ties go to the smaller index.
    """
    n = similarity.shape[0]
    rows: list[int] = []
    cols: list[int] = []
    vals: list[float] = []
    for i in range(n):
        start, end = similarity.indptr[i], similarity.indptr[i + 1]
        idx = similarity.indices[start:end]
        data = similarity.data[start:end]
        keep = (idx != i) & (data > 0)
        idx, data = idx[keep], data[keep]
        order = np.lexsort((idx, -data))[:size]
        rows.extend([i] * len(order))
        cols.extend(idx[order].tolist())
        vals.extend(data[order].tolist())
    return sparse.csr_matrix((vals, (rows, cols)), shape=(n, n))


class ItemKNN(ScoringModel):
    """score(u, i) = sum of sim(i, j) over items j in u's history and i's neighbourhood."""

    model_id = "itemknn"

    def __init__(self, neighborhood_size: int = ITEMKNN_NEIGHBORHOOD) -> None:
        super().__init__()
        if neighborhood_size < 1:
            raise ModelError(f"neighborhood_size must be >= 1, got {neighborhood_size}")
        self.neighborhood_size = neighborhood_size
        self._incidence: sparse.csr_matrix | None = None
        self._weights: sparse.csr_matrix | None = None

    def _fit(self, log: InteractionLog, seed: int) -> None:
        self._incidence = incidence_matrix(log)
        similarity = cosine_similarity(self._incidence)
        # Row i holds topN(i); transposed so that history @ weights sums over j.
        self._weights = top_neighbors(similarity, self.neighborhood_size).T.tocsr()

    def _score_rows(self, rows: IntArray) -> FloatArray:
        assert self._incidence is not None and self._weights is not None
        return np.asarray((self._incidence[rows] @ self._weights).toarray())
