"""Autonomous user choice: candidate sets, utilities and softmax selection."""

from __future__ import annotations

import math
from collections.abc import Mapping, Sequence
from dataclasses import dataclass
from enum import StrEnum

import numpy as np
import numpy.typing as npt
from scipy.special import softmax

from retail_feedback_loop.config.settings import SimulationConfig
from retail_feedback_loop.errors import SimulationError
from retail_feedback_loop.states import ItemState, UserState

FloatArray = npt.NDArray[np.float64]


class Pool(StrEnum):
    """Which slice of the candidate set an item came from."""

    GPOP = "gpop"
    IPOP = "ipop"
    UNKNOWN = "unknown"


@dataclass(frozen=True)
class CandidateSet:
    """C_u: the items a user is aware of, each tagged with its pool."""

    user: str
    step: int
    items: tuple[str, ...]
    provenance: tuple[Pool, ...]

    def __post_init__(self) -> None:
        if len(self.items) != len(self.provenance):
            raise SimulationError("candidate items and provenance differ in length")
        if len(set(self.items)) != len(self.items):
            raise SimulationError(f"duplicate candidates for {self.user} at step {self.step}")

    def __len__(self) -> int:
        return len(self.items)

    def count(self, pool: Pool) -> int:
        return sum(1 for p in self.provenance if p is pool)

    def pool_items(self, pool: Pool) -> tuple[str, ...]:
        return tuple(i for i, p in zip(self.items, self.provenance, strict=True) if p is pool)


def pool_sizes(size: int, mix: Sequence[float]) -> tuple[int, int, int]:
    """GPop and IPop get ceil(fraction * size); Unknown gets the remainder."""
    n_gpop = min(size, math.ceil(mix[0] * size - 1e-9))
    n_ipop = min(size - n_gpop, math.ceil(mix[1] * size - 1e-9))
    return n_gpop, n_ipop, size - n_gpop - n_ipop


def rank_by_strength(strengths: Mapping[str, int]) -> list[str]:
    """Items by descending value, ties by ascending identifier."""
    return sorted(strengths, key=lambda item: (-strengths[item], item))


def gpop_ranking(item_states: Mapping[str, ItemState]) -> list[str]:
    return rank_by_strength({item: state.strength for item, state in item_states.items()})


def build_candidate_set(
    user: str,
    user_state: UserState,
    item_states: Mapping[str, ItemState],
    config: SimulationConfig,
    rng: np.random.Generator,
    gpop: Sequence[str] | None = None,
    step: int = 0,
) -> CandidateSet:
    """Assemble C_u from global popularity, personal history and unseen items.

    An item in both GPop and IPop keeps the GPop tag. An IPop shortfall is
    filled from the next GPop items, then from extra unseen items; an
    Unknown shortfall is filled from the next GPop items.

    Args:
        user: User identifier.
        user_state: The user's current purchase profile.
        item_states: Catalog item states.
        config: Candidate set size and pool mix.
        rng: Generator for the Unknown sample.
        gpop: Precomputed GPop ranking over the catalog; recomputed if None.
        step: Step label stored in the result.

    Returns:
        The candidate set, at most ``candidate_set_size`` items.

    Raises:
        SimulationError: If the catalog is empty.
    """
    if not item_states:
        raise SimulationError("cannot build a candidate set over an empty catalog")
    ranking = list(gpop) if gpop is not None else gpop_ranking(item_states)
    size = min(config.candidate_set_size, len(item_states))
    n_gpop, n_ipop, n_unknown = pool_sizes(size, config.candidate_mix)

    items: list[str] = []
    tags: list[Pool] = []
    chosen: set[str] = set()

    def take(item: str, tag: Pool) -> None:
        items.append(item)
        tags.append(tag)
        chosen.add(item)

    gpop_iter = iter(ranking)

    def take_gpop(n: int) -> int:
        taken = 0
        while taken < n:
            item = next(gpop_iter, None)
            if item is None:
                break
            if item not in chosen:
                take(item, Pool.GPOP)
                taken += 1
        return taken

    take_gpop(n_gpop)

    weights = user_state.purchase_weights
    ipop_taken = 0
    for item in rank_by_strength(weights):
        if ipop_taken == n_ipop:
            break
        if item not in chosen and item in item_states:
            take(item, Pool.IPOP)
            ipop_taken += 1
    shortfall = n_ipop - ipop_taken
    n_unknown += shortfall - take_gpop(shortfall)

    unseen = [item for item in sorted(item_states) if item not in chosen and not weights.get(item)]
    n_sample = min(n_unknown, len(unseen))
    if n_sample:
        picks = rng.choice(len(unseen), size=n_sample, replace=False)
        for index in picks.tolist():
            take(unseen[index], Pool.UNKNOWN)
    take_gpop(n_unknown - n_sample)

    return CandidateSet(user=user, step=step, items=tuple(items), provenance=tuple(tags))


def utility(
    user_state: UserState,
    item_state: ItemState,
    lambda_rarity: float,
    noise_sample: float,
) -> float:
    """V = c_u + G_u * ln(1 + s_i) + lambda / (1 + s_i) + noise."""
    s = item_state.strength
    return (
        user_state.mean_activity
        + user_state.gini * math.log1p(s)
        + lambda_rarity / (1.0 + s)
        + noise_sample
    )


def utilities(
    user_state: UserState,
    strengths: FloatArray,
    lambda_rarity: float,
    noise: FloatArray,
) -> FloatArray:
    """Vectorized ``utility`` over candidate strengths."""
    return (
        user_state.mean_activity
        + user_state.gini * np.log1p(strengths)
        + lambda_rarity / (1.0 + strengths)
        + noise
    )


def choice_probabilities(utility_values: npt.ArrayLike, tau: float) -> FloatArray:
    """Softmax of V / tau, stabilized by subtracting the maximum.

    Raises:
        SimulationError: If there are no candidates or tau is not positive.
    """
    values = np.asarray(utility_values, dtype=np.float64)
    if values.size == 0:
        raise SimulationError("choice over an empty candidate set")
    if not tau > 0:
        raise SimulationError(f"tau must be positive, got {tau}")
    return np.asarray(softmax(values / tau))


def sample_organic(
    user_state: UserState,
    candidates: CandidateSet,
    item_states: Mapping[str, ItemState],
    config: SimulationConfig,
    rng: np.random.Generator,
    noise: FloatArray | None = None,
) -> str:
    """Draw one item from the softmax over fresh utilities of the candidates.

    Args:
        user_state: The choosing user.
        candidates: Non-empty candidate set.
        item_states: Current item strengths.
        config: Supplies tau and lambda.
        rng: Generator for the noise and the draw.
        noise: Fixed noise per candidate instead of standard-normal draws.

    Returns:
        The chosen item.
    """
    if not candidates.items:
        raise SimulationError(f"empty candidate set for {candidates.user}")
    strengths = np.array(
        [item_states[item].strength for item in candidates.items], dtype=np.float64
    )
    if noise is None:
        noise = rng.standard_normal(len(candidates))
    probabilities = choice_probabilities(
        utilities(user_state, strengths, config.lambda_rarity, noise), config.tau
    )
    return candidates.items[int(rng.choice(len(candidates), p=probabilities))]
