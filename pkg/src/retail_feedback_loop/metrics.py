"""Systemic-effect measures: Gini diversity, Jaccard homogenization, concentration."""

from __future__ import annotations

from collections.abc import Iterable, Mapping, Sequence
from dataclasses import dataclass, field
from enum import StrEnum
from typing import Literal

import numpy as np
import numpy.typing as npt
from scipy import sparse

from retail_feedback_loop.config import constants
from retail_feedback_loop.errors import EmptyLogError, MetricError
from retail_feedback_loop.interactions import InteractionLog
from retail_feedback_loop.logger import get_logger

logger = get_logger(__name__)

RankBy = Literal["strength", "popularity"]

JACCARD_BLOCK_ROWS = 512


class Segment(StrEnum):
    """Engagement segment by training-set purchase volume."""

    LIGHT = "light"
    MEDIUM = "medium"
    HEAVY = "heavy"


def gini(weights: Sequence[float] | npt.NDArray[np.float64]) -> float:
    """Gini coefficient of a non-negative weight vector.

    Uses the sorted closed form of sum_i sum_j |w_i - w_j| / (2 d^2 mean(w)).

    Raises:
        MetricError: If the vector is empty or sums to zero.
    """
    w = np.sort(np.asarray(weights, dtype=np.float64))
    d = len(w)
    if d == 0:
        raise MetricError("undefined Gini: empty weight vector")
    if np.any(w < 0):
        raise MetricError("undefined Gini: negative weight")
    total = float(w.sum())
    if total <= 0:
        raise MetricError("undefined Gini: zero mean")
    coefficients = 2.0 * np.arange(1, d + 1, dtype=np.float64) - d - 1
    return float(np.dot(coefficients, w)) / (d * total)


@dataclass(frozen=True)
class IndividualGini:
    mean: float
    per_user: dict[str, float]


def user_purchase_weights(log: InteractionLog) -> dict[str, dict[str, int]]:
    """w_{u,i} for every user with at least one purchase."""
    weights: dict[str, dict[str, int]] = {}
    for u, i, q in zip(
        log.user_idx.tolist(), log.item_idx.tolist(), log.quantities.tolist(), strict=True
    ):
        user_weights = weights.setdefault(log.users[u], {})
        item = log.items[i]
        user_weights[item] = user_weights.get(item, 0) + q
    return weights


def individual_gini_mean(log: InteractionLog) -> IndividualGini:
    """Unweighted mean of G_u over users with purchases, plus per-user values."""
    if len(log) == 0:
        raise EmptyLogError()
    per_user = {
        user: gini(list(w.values())) for user, w in sorted(user_purchase_weights(log).items())
    }
    return IndividualGini(mean=float(np.mean(list(per_user.values()))), per_user=per_user)


def collective_gini(log: InteractionLog, items: Iterable[str] | None = None) -> float:
    """Gini of the item strength vector over the log's item universe.

    Args:
        log: Interaction log.
        items: Optional wider universe; its items without purchases count as zeros.
    """
    if len(log) == 0:
        raise EmptyLogError()
    if items is not None:
        log = log.with_items(items)
    return gini(log.strengths())


def item_popularity(log: InteractionLog) -> npt.NDArray[np.int64]:
    """p_i, distinct purchasers per item, aligned with ``log.items``."""
    pairs = np.unique(log.user_idx * len(log.items) + log.item_idx)
    return np.bincount(pairs % len(log.items), minlength=len(log.items)).astype(np.int64)


def incidence_matrix(log: InteractionLog) -> sparse.csr_matrix:
    """Binary user x item purchase matrix."""
    data = np.ones(len(log), dtype=np.float64)
    matrix = sparse.csr_matrix(
        (data, (log.user_idx, log.item_idx)), shape=(len(log.users), len(log.items))
    )
    matrix.sum_duplicates()
    matrix.data[:] = 1.0
    return matrix


@dataclass(frozen=True)
class JaccardResult:
    mean: float
    stderr: float
    n_pairs: int
    sampled: bool
    empty_pairs: int = 0


def jaccard(a: set[str], b: set[str]) -> float:
    union = len(a | b)
    return len(a & b) / union if union else 0.0


def mean_jaccard(
    log: InteractionLog,
    pair_sample: int | None = None,
    seed: int = 0,
    exact_limit: int = 5000,
    sample_size: int = 200_000,
) -> JaccardResult:
    """Mean Jaccard similarity of user item sets over unordered user pairs.

    Exact over all pairs unless ``pair_sample`` is given or the user count
    exceeds ``exact_limit``; sampled estimates carry a standard error.
    Pairs whose union is empty count as 0.

    Raises:
        MetricError: If fewer than two users are present.
    """
    n = len(log.users)
    if n < 2:
        raise MetricError("mean Jaccard needs at least two users")
    x = incidence_matrix(log)
    sizes = np.asarray(x.sum(axis=1)).ravel()

    if pair_sample is None and n <= exact_limit:
        total = 0.0
        for start in range(0, n, JACCARD_BLOCK_ROWS):
            stop = min(n, start + JACCARD_BLOCK_ROWS)
            inter = (x[start:stop] @ x.T).toarray()
            union = sizes[start:stop, None] + sizes[None, :] - inter
            with np.errstate(divide="ignore", invalid="ignore"):
                values = np.where(union > 0, inter / union, 0.0)
            rows = np.arange(start, stop)[:, None]
            cols = np.arange(n)[None, :]
            total += float(values[cols > rows].sum())
        n_pairs = n * (n - 1) // 2
        n_empty = int(np.sum(sizes == 0))
        empty_pairs = n_empty * (n_empty - 1) // 2
        if empty_pairs:
            logger.info("Jaccard: %d user pairs with empty item sets counted as 0", empty_pairs)
        return JaccardResult(total / n_pairs, 0.0, n_pairs, sampled=False, empty_pairs=empty_pairs)

    m = pair_sample if pair_sample is not None else sample_size
    rng = np.random.default_rng(seed)
    first = rng.integers(0, n, size=m)
    second = rng.integers(0, n - 1, size=m)
    second = second + (second >= first)
    inter = np.asarray(x[first].multiply(x[second]).sum(axis=1)).ravel()
    union = sizes[first] + sizes[second] - inter
    with np.errstate(divide="ignore", invalid="ignore"):
        values = np.where(union > 0, inter / union, 0.0)
    empty_pairs = int(np.sum(union == 0))
    if empty_pairs:
        logger.info("Jaccard: %d sampled pairs with empty item sets counted as 0", empty_pairs)
    stderr = float(values.std(ddof=1) / np.sqrt(m)) if m > 1 else 0.0
    return JaccardResult(float(values.mean()), stderr, m, sampled=True, empty_pairs=empty_pairs)


@dataclass(frozen=True)
class FrequencyRankPoint:
    rank: int
    item: str
    value: int


def frequency_rank(log: InteractionLog, by: RankBy = "strength") -> list[FrequencyRankPoint]:
    """Items sorted by descending strength or popularity, ranks from 1.

    Ties are broken by ascending item identifier.
    """
    if len(log) == 0:
        raise EmptyLogError()
    values = log.strengths() if by == "strength" else item_popularity(log)
    order = np.argsort(-values, kind="stable")
    return [
        FrequencyRankPoint(rank=r, item=log.items[i], value=int(values[i]))
        for r, i in enumerate(order.tolist(), start=1)
    ]


def head_share(log: InteractionLog, k: int) -> float:
    """Share of purchase volume held by the k strongest items."""
    curve = frequency_rank(log, "strength")
    total = sum(p.value for p in curve)
    return sum(p.value for p in curve[:k]) / total


def segment_users(
    train_log: InteractionLog, fraction: float = constants.HEAVY_LIGHT_FRACTION
) -> dict[str, Segment]:
    """Split users into light / medium / heavy buyers by purchase volume.

    The top and bottom ``fraction`` of users by rank (volume descending,
    ties by identifier) are heavy and light buyers.
    """
    if len(train_log) == 0:
        raise EmptyLogError()
    volumes = train_log.user_volumes()
    users = train_log.users
    if len(users) < 10:
        logger.warning("Only %d users; all assigned to the medium segment", len(users))
        return {u: Segment.MEDIUM for u in users}
    order = sorted(range(len(users)), key=lambda i: (-int(volumes[i]), users[i]))
    n_edge = int(len(users) * fraction)
    segments: dict[str, Segment] = {}
    for rank, i in enumerate(order):
        if rank < n_edge:
            segments[users[i]] = Segment.HEAVY
        elif rank >= len(users) - n_edge:
            segments[users[i]] = Segment.LIGHT
        else:
            segments[users[i]] = Segment.MEDIUM
    return segments


def segment_gini_means(
    per_user: Mapping[str, float], segments: Mapping[str, Segment]
) -> dict[Segment, float]:
    """Mean individual Gini per segment; segments without users are NaN."""
    groups: dict[Segment, list[float]] = {s: [] for s in Segment}
    for user, value in sorted(per_user.items()):
        groups[segments.get(user, Segment.MEDIUM)].append(value)
    return {s: float(np.mean(v)) if v else float("nan") for s, v in groups.items()}


@dataclass(frozen=True)
class MetricsReport:
    """All systemic measures of one log at one epoch."""

    epoch: int
    n_events: int
    mean_individual_gini: float
    collective_gini: float
    mean_jaccard: float
    jaccard_stderr: float
    segment_ginis: dict[Segment, float]
    head_share: float
    frequency_rank_strength: list[FrequencyRankPoint] = field(repr=False)
    frequency_rank_popularity: list[FrequencyRankPoint] = field(repr=False)

    def scalars(self) -> dict[str, float]:
        """Flat metric-name -> value map (used for CSV rows and deltas)."""
        values = {
            "n_events": float(self.n_events),
            "mean_individual_gini": self.mean_individual_gini,
            "collective_gini": self.collective_gini,
            "mean_jaccard": self.mean_jaccard,
            "head_share": self.head_share,
        }
        for segment, value in self.segment_ginis.items():
            values[f"gini_{segment.value}"] = value
        return values


def compute_report(
    log: InteractionLog,
    segments: Mapping[str, Segment],
    epoch: int = 0,
    k: int = 20,
    items: Iterable[str] | None = None,
    jaccard_exact_limit: int = 5000,
    jaccard_pair_sample: int | None = None,
    seed: int = 0,
) -> MetricsReport:
    """Compute every measure on one log.

    Args:
        log: Interaction log (historical events included).
        segments: Frozen engagement segments.
        epoch: Epoch label stored in the report.
        k: Head size for the head-share statistic.
        items: Item universe for the collective Gini; defaults to the log's.
        jaccard_exact_limit: User count above which Jaccard is sampled.
        jaccard_pair_sample: Force sampled Jaccard with this many pairs.
        seed: Seed for sampled Jaccard.
    """
    if items is not None:
        log = log.with_items(items)
    individual = individual_gini_mean(log)
    jac = mean_jaccard(
        log, pair_sample=jaccard_pair_sample, seed=seed, exact_limit=jaccard_exact_limit
    )
    return MetricsReport(
        epoch=epoch,
        n_events=len(log),
        mean_individual_gini=individual.mean,
        collective_gini=collective_gini(log),
        mean_jaccard=jac.mean,
        jaccard_stderr=jac.stderr,
        segment_ginis=segment_gini_means(individual.per_user, segments),
        head_share=head_share(log, k),
        frequency_rank_strength=frequency_rank(log, "strength"),
        frequency_rank_popularity=frequency_rank(log, "popularity"),
    )


@dataclass(frozen=True)
class ReportComparison:
    baseline: MetricsReport
    simulated: MetricsReport
    deltas: dict[str, float]


def report(
    baseline_log: InteractionLog,
    simulated_log: InteractionLog,
    segments: Mapping[str, Segment],
    k: int = 20,
    jaccard_exact_limit: int = 5000,
    jaccard_pair_sample: int | None = None,
    seed: int = 0,
) -> ReportComparison:
    """Compare a baseline log with a simulated log (which includes the baseline).

    Both sides use the union of their item universes, zero-strength items
    included, so the collective Gini is computed over the same catalog.
    """
    universe = sorted(set(baseline_log.items) | set(simulated_log.items))

    def measure(log: InteractionLog, epoch: int) -> MetricsReport:
        return compute_report(
            log,
            segments,
            epoch=epoch,
            k=k,
            items=universe,
            jaccard_exact_limit=jaccard_exact_limit,
            jaccard_pair_sample=jaccard_pair_sample,
            seed=seed,
        )

    before = measure(baseline_log, 0)
    after = measure(simulated_log, -1)
    after_scalars = after.scalars()
    deltas = {name: after_scalars[name] - value for name, value in before.scalars().items()}
    return ReportComparison(baseline=before, simulated=after, deltas=deltas)
