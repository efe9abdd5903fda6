"""Abstract base class for scoring models (recommenders)."""

from __future__ import annotations

from abc import ABC, abstractmethod
from collections.abc import Collection, Iterable, Mapping
from dataclasses import dataclass
from typing import ClassVar, Self

import numpy as np
import numpy.typing as npt

from retail_feedback_loop.config.constants import SCORE_EPSILON
from retail_feedback_loop.errors import EmptyLogError, ModelError
from retail_feedback_loop.interactions import InteractionLog

FloatArray = npt.NDArray[np.float64]
IntArray = npt.NDArray[np.int64]

# Users scored per batch in ``top_k_all``
SCORE_BATCH_ROWS = 1024


@dataclass(frozen=True)
class RankedList:
    """K_u: the top items for one user with their sampling weights.

    ``scores`` are the model scores shifted by the minimum over the whole
    catalog plus a small epsilon, so they are positive and keep the order.
    """

    user: str
    items: tuple[str, ...] = ()
    scores: tuple[float, ...] = ()

    def __post_init__(self) -> None:
        if len(self.items) != len(self.scores):
            raise ValueError("items and scores must have equal length")
        if any(b > a for a, b in zip(self.scores, self.scores[1:], strict=False)):
            raise ValueError("ranked-list scores must be non-increasing")

    def __len__(self) -> int:
        return len(self.items)

    def __bool__(self) -> bool:
        return bool(self.items)


def normalize_scores(scores: FloatArray) -> FloatArray:
    """Order-preserving shift to positive values: score - min + epsilon."""
    return scores - scores.min(axis=-1, keepdims=True) + SCORE_EPSILON


class ScoringModel(ABC):
    """Pluggable recommender: a model scoring function plus top-k ranking.

    Subclasses implement ``_fit`` and ``_score_rows``. Items are the sorted
    catalog of the training log (optionally widened to a fixed catalog), so
    a stable sort on descending score breaks ties by ascending item id.
    Further models (for example neural ones) plug in by implementing the
    same two hooks.
    """

    model_id: ClassVar[str]
    personalized: ClassVar[bool] = True

    def __init__(self) -> None:
        self._users: tuple[str, ...] = ()
        self._items: tuple[str, ...] = ()
        self._user_pos: dict[str, int] = {}
        self._item_pos: dict[str, int] = {}
        self._fitted = False

    # -- training ---------------------------------------------------------

    def train(
        self,
        log: InteractionLog,
        seed: int = 0,
        catalog: Iterable[str] | None = None,
    ) -> Self:
        """Fit the model on a training log.

        Args:
            log: Training interactions.
            seed: Seed for any randomness in training.
            catalog: Optional item universe to score; defaults to the log's.

        Returns:
            The fitted model itself.

        Raises:
            EmptyLogError: If the log has no interactions.
        """
        if len(log) == 0:
            raise EmptyLogError("cannot train on a log with no interactions")
        if catalog is not None:
            log = log.with_items(catalog)
        self._users = log.users
        self._items = log.items
        # Users without training events count as unknown
        active = set(log.active_users())
        self._user_pos = {u: i for u, i in log.user_index.items() if u in active}
        self._item_pos = log.item_index
        self._fit(log, seed)
        self._fitted = True
        return self

    @abstractmethod
    def _fit(self, log: InteractionLog, seed: int) -> None:
        """Learn model parameters from the (catalog-aligned) training log.

        Args:
            log: Training interactions.
            seed: Training seed.
        """
        ...

    @abstractmethod
    def _score_rows(self, rows: IntArray) -> FloatArray:
        """Score every catalog item for the given known user rows.

        Args:
            rows: Row indices into the training user universe.

        Returns:
            Array of shape (len(rows), n_items).
        """
        ...

    # -- queries ----------------------------------------------------------

    @property
    def items(self) -> tuple[str, ...]:
        return self._items

    @property
    def users(self) -> tuple[str, ...]:
        return self._users

    def _check_fitted(self) -> None:
        if not self._fitted:
            raise ModelError(f"{self.model_id} model used before training")

    def score_all(self, user: str) -> FloatArray | None:
        """Scores over the catalog, or None if a personalized model never saw the user."""
        self._check_fitted()
        row = self._user_pos.get(user)
        if row is None:
            if self.personalized:
                return None
            row = 0
        return self._score_rows(np.array([row], dtype=np.int64))[0]

    def score(self, user: str, item: str) -> float:
        """R(u, i) for one pair; 0 for a personalized model's unknown user."""
        if item not in self._item_pos:
            raise ModelError(f"item {item!r} is not in the model catalog")
        scores = self.score_all(user)
        return 0.0 if scores is None else float(scores[self._item_pos[item]])

    def top_k(self, user: str, k: int, exclude: Collection[str] | None = None) -> RankedList:
        """The k best items for a user, ties by ascending item identifier.

        Args:
            user: User identifier.
            k: List length; shorter if fewer items remain.
            exclude: Items never to return (e.g. the user's history).

        Returns:
            The ranked list; empty for a personalized model's unknown user.
        """
        scores = self.score_all(user)
        if scores is None:
            return RankedList(user)
        return self._rank(user, scores, k, exclude)

    def top_k_all(
        self,
        k: int,
        users: Iterable[str] | None = None,
        exclude: Mapping[str, Collection[str]] | None = None,
    ) -> dict[str, RankedList]:
        """Ranked lists for many users, scored in batches.

        Args:
            k: List length.
            users: Users to rank; defaults to every training user.
            exclude: Per-user items never to return.

        Returns:
            User -> ranked list; unknown users of personalized models get empty lists.
        """
        self._check_fitted()
        wanted = list(self._users if users is None else users)
        exclude = exclude or {}
        lists: dict[str, RankedList] = {}
        known = [u for u in wanted if u in self._user_pos]
        if not self.personalized:
            shared = self._score_rows(np.array([0], dtype=np.int64))[0]
            for user in wanted:
                lists[user] = self._rank(user, shared, k, exclude.get(user))
            return lists
        for user in wanted:
            if user not in self._user_pos:
                lists[user] = RankedList(user)
        for start in range(0, len(known), SCORE_BATCH_ROWS):
            batch = known[start : start + SCORE_BATCH_ROWS]
            rows = np.array([self._user_pos[u] for u in batch], dtype=np.int64)
            matrix = self._score_rows(rows)
            for user, scores in zip(batch, matrix, strict=True):
                lists[user] = self._rank(user, scores, k, exclude.get(user))
        return {u: lists[u] for u in wanted}

    def _rank(
        self, user: str, scores: FloatArray, k: int, exclude: Collection[str] | None
    ) -> RankedList:
        if k < 1:
            raise ModelError(f"k must be >= 1, got {k}")
        if not np.all(np.isfinite(scores)):
            raise ModelError(f"{self.model_id} produced non-finite scores for {user}")
        weights = normalize_scores(scores)
        order = np.argsort(-scores, kind="stable")
        if exclude:
            banned = np.zeros(len(self._items), dtype=bool)
            banned[[self._item_pos[i] for i in exclude if i in self._item_pos]] = True
            order = order[~banned[order]]
        top = order[:k].tolist()
        return RankedList(
            user=user,
            items=tuple(self._items[i] for i in top),
            scores=tuple(float(weights[i]) for i in top),
        )
