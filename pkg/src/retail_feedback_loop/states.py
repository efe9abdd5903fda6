"""Per-user and per-item aggregates derived from an interaction log."""

from __future__ import annotations

import math
from collections.abc import Iterable, Mapping, MutableMapping
from dataclasses import dataclass, field, replace

from retail_feedback_loop.errors import EmptyLogError
from retail_feedback_loop.interactions import Interaction, InteractionLog
from retail_feedback_loop.metrics import Segment, gini


@dataclass(frozen=True)
class UserState:
    """Purchase profile of one user.

    ``mean_activity`` is c_u, the mean number of purchases per elapsed
    epoch; ``gini`` is G_u, the Gini coefficient of ``purchase_weights``.
    """

    user: str
    purchase_weights: Mapping[str, int] = field(default_factory=dict)
    volume: int = 0
    mean_activity: float = 0.0
    gini: float = 0.0
    segment: Segment = Segment.MEDIUM


@dataclass(frozen=True)
class ItemState:
    """Total purchase volume (s_i) and distinct purchasers (p_i) of one item."""

    item: str
    strength: int = 0
    popularity: int = 0


UserStates = dict[str, UserState]
ItemStates = dict[str, ItemState]


def elapsed_epochs(start_step: int, through_step: int, epoch_length: int) -> int:
    """Number of epochs touched by steps ``start_step..through_step`` (at least 1)."""
    span = through_step - start_step + 1
    return max(1, math.ceil(span / epoch_length))


def _user_state(
    user: str,
    weights: dict[str, int],
    epochs: int,
    segment: Segment,
) -> UserState:
    volume = sum(weights.values())
    return UserState(
        user=user,
        purchase_weights=weights,
        volume=volume,
        mean_activity=volume / epochs,
        gini=gini(list(weights.values())) if weights else 0.0,
        segment=segment,
    )


def rebuild_states(
    log: InteractionLog,
    epoch_length: int,
    through_step: int | None = None,
    segments: Mapping[str, Segment] | None = None,
) -> tuple[UserStates, ItemStates]:
    """Aggregate user and item states from scratch.

    Quantities are expanded into unit purchases. c_u divides each user's
    volume by the number of elapsed epochs between the log's first declared
    step and ``through_step``.

    Args:
        log: Interaction log; every user and item of its universe gets a state.
        epoch_length: Steps per epoch.
        through_step: Last step considered elapsed; defaults to the declared end.
        segments: Frozen engagement segments; users not listed are medium.

    Returns:
        Tuple of (user states, item states) keyed by identifier.

    Raises:
        EmptyLogError: If the log has no interactions.
    """
    if len(log) == 0:
        raise EmptyLogError()
    end = log.step_range[1] if through_step is None else through_step
    epochs = elapsed_epochs(log.step_range[0], end, epoch_length)

    weights: dict[str, dict[str, int]] = {u: {} for u in log.users}
    for u, i, q in zip(
        log.user_idx.tolist(), log.item_idx.tolist(), log.quantities.tolist(), strict=True
    ):
        user_weights = weights[log.users[u]]
        item = log.items[i]
        user_weights[item] = user_weights.get(item, 0) + q

    segments = segments or {}
    user_states = {
        u: _user_state(u, w, epochs, segments.get(u, Segment.MEDIUM)) for u, w in weights.items()
    }

    strength = {it: 0 for it in log.items}
    popularity = {it: 0 for it in log.items}
    for w in weights.values():
        for item, count in w.items():
            strength[item] += count
            popularity[item] += 1
    item_states = {it: ItemState(it, strength[it], popularity[it]) for it in log.items}
    return user_states, item_states


def accumulate(
    user_states: MutableMapping[str, UserState],
    item_states: MutableMapping[str, ItemState],
    events: Iterable[Interaction],
    epochs: int,
) -> None:
    """Fold new events into existing states in place.

    Only touched users and items are replaced. ``epochs`` is the elapsed
    epoch count used for the touched users' c_u.
    """
    touched: dict[str, dict[str, int]] = {}
    for event in events:
        if event.user not in touched:
            touched[event.user] = dict(user_states[event.user].purchase_weights)
        weights = touched[event.user]
        first_purchase = event.item not in weights
        weights[event.item] = weights.get(event.item, 0) + event.quantity
        item = item_states[event.item]
        item_states[event.item] = replace(
            item,
            strength=item.strength + event.quantity,
            popularity=item.popularity + (1 if first_purchase else 0),
        )
    for user, weights in touched.items():
        user_states[user] = _user_state(user, weights, epochs, user_states[user].segment)


def rescale_activity(user_states: MutableMapping[str, UserState], epochs: int) -> None:
    """Recompute every c_u for a new elapsed-epoch count, in place."""
    for user, state in user_states.items():
        user_states[user] = replace(state, mean_activity=state.volume / epochs)

