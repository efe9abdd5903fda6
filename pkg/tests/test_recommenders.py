"""Tests for the recommender models."""

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from retail_feedback_loop.config import ModelSettings
from retail_feedback_loop.errors import ConfigurationError, EmptyLogError, ModelError
from retail_feedback_loop.interactions import InteractionLog
from retail_feedback_loop.metrics import incidence_matrix
from retail_feedback_loop.recommenders import (
    BPR,
    CollectiveRandom,
    ItemKNN,
    MostPop,
    RankedList,
    UserPop,
    create_model,
    normalize_scores,
)
from retail_feedback_loop.recommenders.bpr import triplet_gradients, triplet_objective
from retail_feedback_loop.recommenders.itemknn import cosine_similarity
from tests.conftest import make_log


@pytest.fixture
def knn_log() -> InteractionLog:
    """a is bought with b twice and with c once; d stands alone."""
    return make_log(
        [
            ("u1", "a", 0),
            ("u1", "b", 0),
            ("u2", "a", 1),
            ("u2", "b", 1),
            ("u3", "a", 2),
            ("u3", "c", 2),
            ("u4", "d", 3),
        ]
    )


class TestRankedList:
    """Tests for ranked-list invariants."""

    def test_scores_must_not_increase(self) -> None:
        """Ranked lists are sorted by descending score."""
        with pytest.raises(ValueError, match="non-increasing"):
            RankedList("u", ("a", "b"), (1.0, 2.0))

    def test_lengths_must_match(self) -> None:
        """Each item carries one score."""
        with pytest.raises(ValueError, match="equal length"):
            RankedList("u", ("a",), ())

    @given(
        arrays(
            np.float64,
            st.integers(1, 30),
            elements=st.floats(-1e6, 1e6, allow_nan=False, allow_subnormal=False),
        )
    )
    def test_normalize_scores_positive_and_monotone(self, scores: np.ndarray) -> None:
        """The shift keeps the order and makes every weight positive."""
        weights = normalize_scores(scores)
        assert np.all(weights > 0)
        order = np.argsort(-scores, kind="stable")
        assert np.all(np.diff(weights[order]) <= 0)


class TestMostPop:
    """Tests for the global popularity model."""

    def test_ranks_by_strength_ties_by_id(self, toy_log: InteractionLog) -> None:
        """cheese and dates tie on strength; cheese comes first."""
        ranked = MostPop().train(toy_log).top_k("alice", 3)
        assert ranked.items == ("apple", "bread", "cheese")
        assert ranked.scores[0] == pytest.approx(3.0)
        assert ranked.scores[-1] > 0

    def test_same_list_for_every_user(self, toy_log: InteractionLog) -> None:
        """Unknown users get the same global list."""
        model = MostPop().train(toy_log)
        assert model.top_k("stranger", 2).items == model.top_k("bob", 2).items

    def test_exclude(self, toy_log: InteractionLog) -> None:
        """Excluded items are skipped, the list refills from below."""
        ranked = MostPop().train(toy_log).top_k("alice", 2, exclude={"apple"})
        assert ranked.items == ("bread", "cheese")

    def test_short_catalog(self, toy_log: InteractionLog) -> None:
        """k larger than the catalog returns the whole catalog."""
        assert len(MostPop().train(toy_log).top_k("alice", 10)) == 4

    def test_catalog_widening(self, toy_log: InteractionLog) -> None:
        """Items outside the training log rank last with zero strength."""
        model = MostPop().train(toy_log, catalog=["zucchini"])
        assert model.top_k("alice", 5).items[-1] == "zucchini"
        assert model.score("alice", "zucchini") == 0.0

    def test_untrained(self) -> None:
        """Queries before training are model errors."""
        with pytest.raises(ModelError, match="before training"):
            MostPop().top_k("alice", 3)

    def test_empty_training_log(self) -> None:
        """Training needs interactions."""
        with pytest.raises(EmptyLogError):
            MostPop().train(InteractionLog.empty(["u"], ["i"]))

    def test_invalid_k(self, toy_log: InteractionLog) -> None:
        """k must be positive."""
        with pytest.raises(ModelError, match="k must"):
            MostPop().train(toy_log).top_k("alice", 0)


class TestItemKNN:
    """Tests for item-based collaborative filtering."""

    def test_cosine_similarity(self, knn_log: InteractionLog) -> None:
        """cos(i, j) = |U_i & U_j| / sqrt(|U_i| |U_j|)."""
        sim = cosine_similarity(incidence_matrix(knn_log)).toarray()
        assert sim[0, 1] == pytest.approx(2 / np.sqrt(6))
        assert sim[0, 2] == pytest.approx(1 / np.sqrt(3))
        assert sim[1, 2] == 0.0
        assert np.allclose(sim, sim.T)

    def test_scores_sum_over_neighbourhood(self, knn_log: InteractionLog) -> None:
        """With one neighbour per item, u3 is pointed to b through a."""
        model = ItemKNN(neighborhood_size=1).train(knn_log)
        assert model.score("u3", "b") == pytest.approx(2 / np.sqrt(6))
        assert model.score("u3", "c") == pytest.approx(1 / np.sqrt(3))
        assert model.score("u3", "a") == 0.0
        assert model.top_k("u3", 4).items == ("b", "c", "a", "d")

    def test_exclude_history(self, knn_log: InteractionLog) -> None:
        """Excluding the history removes purchased items."""
        model = ItemKNN(neighborhood_size=1).train(knn_log)
        history = knn_log.item_sets()["u3"]
        assert history == {"a", "c"}
        assert model.top_k("u3", 2, exclude=history).items == ("b", "d")

    def test_unknown_user(self, knn_log: InteractionLog) -> None:
        """Personalized models return empty lists and zero scores for strangers."""
        model = ItemKNN().train(knn_log)
        assert not model.top_k("stranger", 3)
        assert model.score("stranger", "a") == 0.0

    def test_top_k_all_matches_top_k(self, knn_log: InteractionLog) -> None:
        """Batched ranking equals one-by-one ranking."""
        model = ItemKNN(neighborhood_size=2).train(knn_log)
        lists = model.top_k_all(3, users=["u1", "u3", "stranger"])
        assert list(lists) == ["u1", "u3", "stranger"]
        assert lists["u1"] == model.top_k("u1", 3)
        assert lists["stranger"].items == ()

    def test_rejects_empty_neighbourhood(self) -> None:
        """The neighbourhood holds at least one item."""
        with pytest.raises(ModelError):
            ItemKNN(neighborhood_size=0)


class TestBPR:
    """Tests for the matrix-factorization model."""

    def test_gradients_match_finite_differences(self) -> None:
        """Analytic gradients agree with central differences."""
        rng = np.random.default_rng(5)
        v_u, v_i, v_j = rng.normal(size=(3, 4))
        b_i, b_j, reg = 0.3, -0.2, 0.05
        grads = triplet_gradients(v_u, v_i, v_j, b_i, b_j, reg)
        h = 1e-6
        params = [v_u, v_i, v_j]
        for which, grad in enumerate(grads[:3]):
            for f in range(4):
                up = [p.copy() for p in params]
                down = [p.copy() for p in params]
                up[which][f] += h
                down[which][f] -= h
                numeric = (
                    triplet_objective(*up, b_i, b_j, reg)
                    - triplet_objective(*down, b_i, b_j, reg)
                ) / (2 * h)
                assert grad[f] == pytest.approx(numeric, abs=1e-6)
        numeric_bi = (
            triplet_objective(v_u, v_i, v_j, b_i + h, b_j, reg)
            - triplet_objective(v_u, v_i, v_j, b_i - h, b_j, reg)
        ) / (2 * h)
        assert grads[3] == pytest.approx(numeric_bi, abs=1e-6)

    def test_deterministic_for_seed(self, small_history: InteractionLog) -> None:
        """Equal seeds give equal factors."""
        first = BPR(factors=4, epochs=2).train(small_history, seed=3)
        second = BPR(factors=4, epochs=2).train(small_history, seed=3)
        assert np.array_equal(first.item_factors, second.item_factors)

    def test_ranks_purchases_above_other_group(self) -> None:
        """Bought items outrank the other group's items for almost every pair."""
        rows = []
        for group in ("a", "b"):
            pairs = [(1, 2), (1, 3), (2, 3)] * 2
            for n, (x, y) in enumerate(pairs):
                rows += [(f"{group}{n}", f"{group}{x}", 0), (f"{group}{n}", f"{group}{y}", 0)]
        log = make_log(rows)
        model = BPR(factors=4, epochs=200, batch_size=8, regularization=0.001).train(log, seed=1)
        history = log.item_sets()
        ordered = total = 0
        for user, bought in history.items():
            foreign = [i for i in log.items if i[0] != user[0]]
            for pos in bought:
                for neg in foreign:
                    ordered += model.score(user, pos) > model.score(user, neg)
                    total += 1
        assert ordered / total >= 0.9

    def test_skips_saturated_users(self) -> None:
        """Users who bought the whole catalog have no negatives."""
        log = make_log([("u", "x", 0), ("u", "y", 0), ("v", "x", 0)])
        model = BPR(factors=2, epochs=1).train(log)
        assert model.skipped_users == 1

    def test_rejects_bad_hyperparameters(self) -> None:
        """Non-positive rates are model errors."""
        with pytest.raises(ModelError):
            BPR(learning_rate=0.0)


class TestBaselines:
    """Tests for the random and individual-popularity baselines."""

    def test_collective_random_seeded(self, toy_log: InteractionLog) -> None:
        """The shared random list depends on the seed only."""
        first = CollectiveRandom().train(toy_log, seed=4).top_k("alice", 4)
        second = CollectiveRandom().train(toy_log, seed=4).top_k("bob", 4)
        assert first.items == second.items

    def test_user_pop(self, toy_log: InteractionLog) -> None:
        """Own counts first, global strength below."""
        model = UserPop().train(toy_log)
        assert model.top_k("carol", 4).items == ("apple", "dates", "bread", "cheese")
        assert model.top_k("alice", 4).items == ("apple", "bread", "cheese", "dates")


class TestCreateModel:
    """Tests for the model factory."""

    def test_settings_become_defaults(self) -> None:
        """Hyperparameters come from the settings unless overridden."""
        model = create_model("itemknn", ModelSettings(itemknn_neighborhood=7))
        assert isinstance(model, ItemKNN) and model.neighborhood_size == 7
        bpr = create_model("bpr", ModelSettings(bpr_factors=3), epochs=2)
        assert isinstance(bpr, BPR) and (bpr.factors, bpr.epochs) == (3, 2)

    def test_every_identifier(self) -> None:
        """Each identifier maps to its class."""
        assert isinstance(create_model("mostpop"), MostPop)
        assert isinstance(create_model("random"), CollectiveRandom)
        assert isinstance(create_model("userpop"), UserPop)

    def test_unknown_identifier(self) -> None:
        """Unknown identifiers are configuration errors."""
        with pytest.raises(ConfigurationError, match="unknown model"):
            create_model("neumf")

    def test_unknown_hyperparameter(self) -> None:
        """Unknown hyperparameters are configuration errors."""
        with pytest.raises(ConfigurationError, match="invalid hyperparameter"):
            create_model("mostpop", depth=3)
