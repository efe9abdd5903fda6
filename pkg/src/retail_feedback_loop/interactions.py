"""Interaction events, columnar interaction logs, and activity schedules."""

from __future__ import annotations

from collections.abc import Iterable, Iterator, Mapping, Sequence
from dataclasses import dataclass, field
from enum import IntEnum

import numpy as np
import numpy.typing as npt

from retail_feedback_loop.errors import DataError

IntArray = npt.NDArray[np.int64]


class Source(IntEnum):
    """Where an interaction came from."""

    HISTORICAL = 0
    ORGANIC = 1
    RECOMMENDED = 2

    @property
    def label(self) -> str:
        return self.name.lower()

    @classmethod
    def from_label(cls, label: str) -> Source:
        try:
            return cls[label.strip().upper()]
        except KeyError as err:
            raise DataError(f"unknown interaction source: {label!r}") from err


@dataclass(frozen=True)
class Interaction:
    """One purchase event: user bought ``quantity`` units of item at step."""

    user: str
    item: str
    step: int
    quantity: int = 1
    source: Source = Source.HISTORICAL

    def __post_init__(self) -> None:
        if self.step < 0:
            raise DataError(f"step must be non-negative, got {self.step}")
        if self.quantity < 1:
            raise DataError(f"quantity must be >= 1, got {self.quantity}")


@dataclass(frozen=True, eq=False)
class InteractionLog:
    """Step-ordered interactions stored column-wise.

    ``users`` and ``items`` are sorted identifier tuples; the index columns
    point into them, so ascending index order is ascending identifier
    order. ``step_range`` is the declared time span and may extend beyond
    the first and last event.
    """

    users: tuple[str, ...]
    items: tuple[str, ...]
    user_idx: IntArray
    item_idx: IntArray
    steps: IntArray
    quantities: IntArray
    sources: IntArray
    step_range: tuple[int, int]
    categories: Mapping[str, str] = field(default_factory=dict)

    def __post_init__(self) -> None:
        n = len(self.steps)
        for name in ("user_idx", "item_idx", "quantities", "sources"):
            if len(getattr(self, name)) != n:
                length = len(getattr(self, name))
                raise DataError(f"column {name} has length {length}, expected {n}")
        if n and np.any(np.diff(self.steps) < 0):
            raise DataError("events must be sorted by step")
        if n:
            lo, hi = self.step_range
            if int(self.steps[0]) < lo or int(self.steps[-1]) > hi:
                raise DataError(f"events fall outside the declared step range {self.step_range}")

    # -- construction -----------------------------------------------------

    @classmethod
    def empty(
        cls,
        users: Iterable[str] = (),
        items: Iterable[str] = (),
        step_range: tuple[int, int] = (0, 0),
    ) -> InteractionLog:
        zeros = np.zeros(0, dtype=np.int64)
        return cls(
            users=tuple(sorted(set(users))),
            items=tuple(sorted(set(items))),
            user_idx=zeros,
            item_idx=zeros.copy(),
            steps=zeros.copy(),
            quantities=zeros.copy(),
            sources=zeros.copy(),
            step_range=step_range,
        )

    @classmethod
    def from_interactions(
        cls,
        interactions: Iterable[Interaction],
        users: Iterable[str] | None = None,
        items: Iterable[str] | None = None,
        step_range: tuple[int, int] | None = None,
        categories: Mapping[str, str] | None = None,
    ) -> InteractionLog:
        """Build a log from events, sorting them stably by step.

        Args:
            interactions: Events in any order.
            users: Optional user universe; must contain every event's user.
            items: Optional item universe; must contain every event's item.
            step_range: Declared span; defaults to the events' min and max step.
            categories: Optional item -> category label map.

        Returns:
            The columnar log.
        """
        events = sorted(interactions, key=lambda e: e.step)
        user_set = {e.user for e in events}
        item_set = {e.item for e in events}
        if users is not None:
            universe = set(users)
            if not user_set <= universe:
                raise DataError("events reference users outside the user universe")
            user_set = universe
        if items is not None:
            universe = set(items)
            if not item_set <= universe:
                raise DataError("events reference items outside the item universe")
            item_set = universe
        user_tuple = tuple(sorted(user_set))
        item_tuple = tuple(sorted(item_set))
        user_pos = {u: i for i, u in enumerate(user_tuple)}
        item_pos = {it: i for i, it in enumerate(item_tuple)}
        if step_range is None:
            step_range = (events[0].step, events[-1].step) if events else (0, 0)
        return cls(
            users=user_tuple,
            items=item_tuple,
            user_idx=np.array([user_pos[e.user] for e in events], dtype=np.int64),
            item_idx=np.array([item_pos[e.item] for e in events], dtype=np.int64),
            steps=np.array([e.step for e in events], dtype=np.int64),
            quantities=np.array([e.quantity for e in events], dtype=np.int64),
            sources=np.array([int(e.source) for e in events], dtype=np.int64),
            step_range=step_range,
            categories=dict(categories or {}),
        )

    # -- basic views ------------------------------------------------------

    def __len__(self) -> int:
        return len(self.steps)

    def __iter__(self) -> Iterator[Interaction]:
        return self.events()

    def events(self) -> Iterator[Interaction]:
        for u, i, t, q, s in zip(
            self.user_idx.tolist(),
            self.item_idx.tolist(),
            self.steps.tolist(),
            self.quantities.tolist(),
            self.sources.tolist(),
            strict=True,
        ):
            yield Interaction(self.users[u], self.items[i], t, q, Source(s))

    @property
    def total_quantity(self) -> int:
        return int(self.quantities.sum())

    @property
    def user_index(self) -> dict[str, int]:
        return {u: i for i, u in enumerate(self.users)}

    @property
    def item_index(self) -> dict[str, int]:
        return {it: i for i, it in enumerate(self.items)}

    def active_users(self) -> tuple[str, ...]:
        """Users with at least one event, in identifier order."""
        present = np.unique(self.user_idx)
        return tuple(self.users[i] for i in present.tolist())

    def strengths(self) -> IntArray:
        """Total purchased quantity per item, aligned with ``items``."""
        counts = np.bincount(self.item_idx, weights=self.quantities, minlength=len(self.items))
        return counts.astype(np.int64)

    def user_volumes(self) -> IntArray:
        """Total purchased quantity per user, aligned with ``users``."""
        counts = np.bincount(self.user_idx, weights=self.quantities, minlength=len(self.users))
        return counts.astype(np.int64)

    def same_events(self, other: InteractionLog) -> bool:
        """True if both logs hold the same event sequence (universes may differ)."""
        if len(self) != len(other):
            return False
        return list(self.events()) == list(other.events())

    # -- derivation -------------------------------------------------------

    def select(
        self,
        mask: npt.NDArray[np.bool_],
        step_range: tuple[int, int] | None = None,
        shrink: bool = False,
    ) -> InteractionLog:
        """Keep the events where ``mask`` is true.

        Args:
            mask: Boolean mask over events.
            step_range: Declared range of the result; defaults to this log's.
            shrink: Drop users and items left without events.

        Returns:
            The filtered log.
        """
        user_idx = self.user_idx[mask]
        item_idx = self.item_idx[mask]
        users, items = self.users, self.items
        if shrink:
            kept_users = np.unique(user_idx)
            kept_items = np.unique(item_idx)
            user_idx = np.searchsorted(kept_users, user_idx).astype(np.int64)
            item_idx = np.searchsorted(kept_items, item_idx).astype(np.int64)
            users = tuple(self.users[i] for i in kept_users.tolist())
            items = tuple(self.items[i] for i in kept_items.tolist())
        item_set = set(items)
        kept_categories = {it: c for it, c in self.categories.items() if it in item_set}
        return InteractionLog(
            users=users,
            items=items,
            user_idx=user_idx,
            item_idx=item_idx,
            steps=self.steps[mask],
            quantities=self.quantities[mask],
            sources=self.sources[mask],
            step_range=step_range or self.step_range,
            categories=kept_categories,
        )

    def between(self, start: int, end: int) -> InteractionLog:
        """Events with ``start <= step <= end``; the declared range becomes [start, end]."""
        mask = (self.steps >= start) & (self.steps <= end)
        return self.select(mask, step_range=(start, end))

    def by_source(self, source: Source) -> InteractionLog:
        return self.select(self.sources == int(source))

    def extend(
        self, interactions: Sequence[Interaction], end_step: int | None = None
    ) -> InteractionLog:
        """Append events that are not earlier than this log's last event.

        Every new event's user and item must already be in the universes.
        """
        if not interactions:
            if end_step is None:
                return self
            return self.with_step_range((self.step_range[0], max(end_step, self.step_range[1])))
        user_pos = self.user_index
        item_pos = self.item_index
        try:
            new_users = np.array([user_pos[e.user] for e in interactions], dtype=np.int64)
            new_items = np.array([item_pos[e.item] for e in interactions], dtype=np.int64)
        except KeyError as err:
            raise DataError(f"identifier {err.args[0]!r} is outside the log universe") from err
        new_steps = np.array([e.step for e in interactions], dtype=np.int64)
        last = max(int(new_steps.max()), end_step if end_step is not None else 0)
        return InteractionLog(
            users=self.users,
            items=self.items,
            user_idx=np.concatenate([self.user_idx, new_users]),
            item_idx=np.concatenate([self.item_idx, new_items]),
            steps=np.concatenate([self.steps, new_steps]),
            quantities=np.concatenate(
                [self.quantities, np.array([e.quantity for e in interactions], dtype=np.int64)]
            ),
            sources=np.concatenate(
                [self.sources, np.array([int(e.source) for e in interactions], dtype=np.int64)]
            ),
            step_range=(self.step_range[0], max(self.step_range[1], last)),
            categories=self.categories,
        )

    def with_step_range(self, step_range: tuple[int, int]) -> InteractionLog:
        return InteractionLog(
            users=self.users,
            items=self.items,
            user_idx=self.user_idx,
            item_idx=self.item_idx,
            steps=self.steps,
            quantities=self.quantities,
            sources=self.sources,
            step_range=step_range,
            categories=self.categories,
        )

    def with_items(self, items: Iterable[str]) -> InteractionLog:
        """Re-index onto a larger item universe (e.g. a fixed catalog)."""
        universe = tuple(sorted(set(items) | set(self.items)))
        pos = {it: i for i, it in enumerate(universe)}
        remap = np.array([pos[it] for it in self.items], dtype=np.int64)
        return InteractionLog(
            users=self.users,
            items=universe,
            user_idx=self.user_idx,
            item_idx=remap[self.item_idx] if len(self) else self.item_idx,
            steps=self.steps,
            quantities=self.quantities,
            sources=self.sources,
            step_range=self.step_range,
            categories=self.categories,
        )

    def item_sets(self) -> dict[str, set[str]]:
        """Distinct items purchased by each user in the universe."""
        sets: dict[str, set[str]] = {u: set() for u in self.users}
        for u, i in zip(self.user_idx.tolist(), self.item_idx.tolist(), strict=True):
            sets[self.users[u]].add(self.items[i])
        return sets


@dataclass(frozen=True)
class ActivitySchedule:
    """Awakened users and their basket sizes for each step of a horizon."""

    start_step: int
    end_step: int
    baskets: Mapping[int, tuple[tuple[str, int], ...]]

    def __post_init__(self) -> None:
        if self.end_step < self.start_step:
            raise DataError(f"empty schedule horizon [{self.start_step}, {self.end_step}]")
        for step, entries in self.baskets.items():
            if not self.start_step <= step <= self.end_step:
                raise DataError(f"schedule step {step} outside horizon")
            seen: set[str] = set()
            for user, size in entries:
                if size < 1:
                    raise DataError(f"basket size must be >= 1 (user {user}, step {step})")
                if user in seen:
                    raise DataError(f"user {user} appears twice at step {step}")
                seen.add(user)

    def at(self, step: int) -> tuple[tuple[str, int], ...]:
        return self.baskets.get(step, ())

    def covers(self, start: int, end: int) -> bool:
        return self.start_step <= start and end <= self.end_step

    @property
    def total_basket_mass(self) -> int:
        return sum(size for entries in self.baskets.values() for _, size in entries)
