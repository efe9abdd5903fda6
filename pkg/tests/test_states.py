"""Tests for user and item state aggregation."""

import pytest

from retail_feedback_loop.errors import EmptyLogError
from retail_feedback_loop.interactions import Interaction, InteractionLog, Source
from retail_feedback_loop.metrics import Segment, gini
from retail_feedback_loop.states import (
    accumulate,
    elapsed_epochs,
    rebuild_states,
    rescale_activity,
)


class TestRebuildStates:
    """Tests for from-scratch aggregation."""

    def test_item_strength_and_popularity(self, toy_log: InteractionLog) -> None:
        """s_i counts units, p_i counts distinct buyers."""
        _, items = rebuild_states(toy_log, epoch_length=3)
        assert items["apple"].strength == 4
        assert items["apple"].popularity == 3
        assert items["bread"].strength == 2
        assert items["bread"].popularity == 1

    def test_user_profile(self, toy_log: InteractionLog) -> None:
        """Weights, volume, c_u and G_u of one user."""
        users, _ = rebuild_states(toy_log, epoch_length=3)
        alice = users["alice"]
        assert dict(alice.purchase_weights) == {"apple": 2, "bread": 2}
        assert alice.volume == 4
        # Two epochs of three steps cover [0, 5]
        assert alice.mean_activity == pytest.approx(2.0)
        assert alice.gini == pytest.approx(0.0)

    def test_through_step_sets_elapsed_epochs(self, toy_log: InteractionLog) -> None:
        """c_u divides by the epochs up to ``through_step``."""
        users, _ = rebuild_states(toy_log, epoch_length=3, through_step=2)
        assert users["alice"].mean_activity == pytest.approx(4.0)

    def test_segments_applied(self, toy_log: InteractionLog) -> None:
        """Listed users take their segment; others are medium."""
        users, _ = rebuild_states(toy_log, 3, segments={"bob": Segment.HEAVY})
        assert users["bob"].segment is Segment.HEAVY
        assert users["carol"].segment is Segment.MEDIUM

    def test_empty_log(self) -> None:
        """States need at least one interaction."""
        with pytest.raises(EmptyLogError):
            rebuild_states(InteractionLog.empty(["u"], ["i"]), 3)


class TestAccumulate:
    """Tests for incremental updates."""

    def test_matches_rebuild(self, toy_log: InteractionLog) -> None:
        """Folding events in equals rebuilding from the extended log."""
        users, items = rebuild_states(toy_log, 3)
        events = [
            Interaction("bob", "apple", 6, 1, Source.ORGANIC),
            Interaction("bob", "dates", 6, 1, Source.RECOMMENDED),
            Interaction("carol", "dates", 7, 2, Source.ORGANIC),
        ]
        accumulate(users, items, events, epochs=3)
        rebuilt_users, rebuilt_items = rebuild_states(toy_log.extend(events), 3)
        assert items == rebuilt_items
        for user in ("bob", "carol"):
            assert users[user].purchase_weights == rebuilt_users[user].purchase_weights
            assert users[user].mean_activity == pytest.approx(rebuilt_users[user].mean_activity)
            assert users[user].gini == pytest.approx(rebuilt_users[user].gini)

    def test_popularity_counts_first_purchase_only(self, toy_log: InteractionLog) -> None:
        """A repeat buyer does not raise p_i."""
        users, items = rebuild_states(toy_log, 3)
        accumulate(users, items, [Interaction("alice", "apple", 6)], epochs=3)
        assert items["apple"].popularity == 3
        assert items["apple"].strength == 5

    def test_gini_follows_weights(self, toy_log: InteractionLog) -> None:
        """G_u is recomputed from the new weights."""
        users, items = rebuild_states(toy_log, 3)
        accumulate(users, items, [Interaction("alice", "apple", 6, 4)], epochs=3)
        assert users["alice"].gini == pytest.approx(gini([6, 2]))


class TestHelpers:
    """Tests for elapsed epochs and rescaling."""

    def test_elapsed_epochs(self) -> None:
        """Partial epochs count; at least one epoch elapses."""
        assert elapsed_epochs(0, 29, 30) == 1
        assert elapsed_epochs(0, 30, 30) == 2
        assert elapsed_epochs(5, 5, 30) == 1

    def test_rescale_activity(self, toy_log: InteractionLog) -> None:
        """c_u = volume / epochs."""
        users, _ = rebuild_states(toy_log, 3)
        rescale_activity(users, 4)
        assert users["alice"].mean_activity == pytest.approx(1.0)
