"""Tests for interaction logs and activity schedules."""

import numpy as np
import pytest

from retail_feedback_loop.errors import DataError
from retail_feedback_loop.interactions import (
    ActivitySchedule,
    Interaction,
    InteractionLog,
    Source,
)


class TestInteraction:
    """Tests for single purchase events."""

    def test_rejects_negative_step(self) -> None:
        """Steps start at zero."""
        with pytest.raises(DataError, match="step"):
            Interaction("u", "i", -1)

    def test_rejects_zero_quantity(self) -> None:
        """A purchase buys at least one unit."""
        with pytest.raises(DataError, match="quantity"):
            Interaction("u", "i", 0, quantity=0)

    def test_source_labels_round_trip(self) -> None:
        """Source labels are the lower-case member names."""
        assert Source.RECOMMENDED.label == "recommended"
        assert Source.from_label(" Organic ") is Source.ORGANIC

    def test_unknown_source_label(self) -> None:
        """Unknown labels are data errors."""
        with pytest.raises(DataError, match="source"):
            Source.from_label("imported")


class TestInteractionLog:
    """Tests for the columnar log."""

    def test_universes_are_sorted(self, toy_log: InteractionLog) -> None:
        """Users and items are sorted identifier tuples."""
        assert toy_log.users == ("alice", "bob", "carol")
        assert toy_log.items == ("apple", "bread", "cheese", "dates")

    def test_events_sorted_by_step(self, toy_log: InteractionLog) -> None:
        """Events come out in non-decreasing step order."""
        steps = [e.step for e in toy_log]
        assert steps == sorted(steps)

    def test_strengths_and_volumes(self, toy_log: InteractionLog) -> None:
        """Strength sums quantities per item, volume per user."""
        assert toy_log.strengths().tolist() == [4, 2, 1, 1]
        assert toy_log.user_volumes().tolist() == [4, 2, 2]

    def test_between_declares_range(self, toy_log: InteractionLog) -> None:
        """between keeps the inclusive window and declares it as the range."""
        window = toy_log.between(2, 4)
        assert window.step_range == (2, 4)
        assert sorted(e.step for e in window) == [2, 3, 4]
        assert window.users == toy_log.users

    def test_select_shrink_drops_idle_identifiers(self, toy_log: InteractionLog) -> None:
        """shrink removes users and items without events."""
        kept = toy_log.select(toy_log.steps <= 1, shrink=True)
        assert kept.users == ("alice", "bob")
        assert kept.items == ("apple",)
        assert len(kept) == 3

    def test_extend_appends_and_widens_range(self, toy_log: InteractionLog) -> None:
        """New events append after the last one and stretch the range."""
        extended = toy_log.extend(
            [Interaction("bob", "dates", 7, 1, Source.ORGANIC)], end_step=8
        )
        assert len(extended) == len(toy_log) + 1
        assert extended.step_range == (0, 8)
        assert list(extended.events())[-1].source is Source.ORGANIC

    def test_extend_rejects_unknown_identifier(self, toy_log: InteractionLog) -> None:
        """Simulated events must stay inside the universes."""
        with pytest.raises(DataError, match="outside the log universe"):
            toy_log.extend([Interaction("dave", "apple", 6)])

    def test_extend_without_events_moves_range(self, toy_log: InteractionLog) -> None:
        """An empty step still advances the declared end."""
        assert toy_log.extend([], end_step=9).step_range == (0, 9)

    def test_with_items_keeps_events(self, toy_log: InteractionLog) -> None:
        """Widening the catalog adds zero-strength items only."""
        wider = toy_log.with_items(["zucchini"])
        assert wider.items[-1] == "zucchini"
        assert wider.strengths().tolist() == [4, 2, 1, 1, 0]
        assert wider.same_events(toy_log)

    def test_events_outside_range_rejected(self) -> None:
        """The declared range must contain every event."""
        with pytest.raises(DataError, match="declared step range"):
            InteractionLog.from_interactions([Interaction("u", "i", 5)], step_range=(0, 3))

    def test_by_source(self, toy_log: InteractionLog) -> None:
        """Filtering by source keeps matching events only."""
        assert len(toy_log.by_source(Source.HISTORICAL)) == len(toy_log)
        assert len(toy_log.by_source(Source.RECOMMENDED)) == 0

    def test_item_sets(self, toy_log: InteractionLog) -> None:
        """Distinct purchased items per user."""
        sets = toy_log.item_sets()
        assert sets["alice"] == {"apple", "bread"}
        assert sets["carol"] == {"apple", "dates"}

    def test_empty_log(self) -> None:
        """An empty log keeps its universes."""
        log = InteractionLog.empty(users=["b", "a"], items=["x"])
        assert len(log) == 0
        assert log.users == ("a", "b")
        assert np.array_equal(log.strengths(), [0])


class TestActivitySchedule:
    """Tests for awakened-user schedules."""

    def test_lookup_and_mass(self) -> None:
        """Basket mass sums sizes over steps."""
        schedule = ActivitySchedule(0, 4, {1: (("a", 2), ("b", 1)), 3: (("a", 1),)})
        assert schedule.at(1) == (("a", 2), ("b", 1))
        assert schedule.at(2) == ()
        assert schedule.total_basket_mass == 4
        assert schedule.covers(0, 4)
        assert not schedule.covers(0, 5)

    def test_rejects_duplicate_user(self) -> None:
        """A user wakes at most once per step."""
        with pytest.raises(DataError, match="twice"):
            ActivitySchedule(0, 2, {1: (("a", 1), ("a", 2))})

    def test_rejects_step_outside_horizon(self) -> None:
        """Basket steps must lie in the horizon."""
        with pytest.raises(DataError, match="outside horizon"):
            ActivitySchedule(0, 2, {5: (("a", 1),)})

    def test_rejects_empty_basket(self) -> None:
        """Basket sizes are positive."""
        with pytest.raises(DataError, match="basket size"):
            ActivitySchedule(0, 2, {1: (("a", 0),)})
