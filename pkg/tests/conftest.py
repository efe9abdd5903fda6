"""Shared fixtures: toy logs, small synthetic histories and simulation configs."""

from pathlib import Path

import pytest

from retail_feedback_loop.config import ExperimentConfig, SimulationConfig, SyntheticSettings
from retail_feedback_loop.ingestion import build_log, generate_synthetic
from retail_feedback_loop.interactions import InteractionLog, Source


def make_log(
    rows: list[tuple[str, str, int]],
    step_range: tuple[int, int] | None = None,
    source: Source = Source.HISTORICAL,
) -> InteractionLog:
    """Build a log from (user, item, step) rows with unit quantities."""
    return build_log(
        [r[0] for r in rows],
        [r[1] for r in rows],
        [r[2] for r in rows],
        [1] * len(rows),
        [int(source)] * len(rows),
        step_range=step_range,
    )


@pytest.fixture
def toy_log() -> InteractionLog:
    """Three users, four items, two epochs of three steps."""
    return make_log(
        [
            ("alice", "apple", 0),
            ("alice", "apple", 1),
            ("alice", "bread", 2),
            ("bob", "apple", 0),
            ("bob", "cheese", 4),
            ("carol", "dates", 3),
            ("carol", "apple", 5),
            ("alice", "bread", 5),
        ],
        step_range=(0, 5),
    )


@pytest.fixture
def small_history() -> InteractionLog:
    """40 users, 60 items, 8 epochs of 5 steps, every user active each epoch."""
    return generate_synthetic(
        n_users=40,
        n_items=60,
        n_epochs=8,
        popularity_exponent=1.0,
        seed=7,
        steps_per_epoch=5,
        mean_baskets=3.0,
    )


@pytest.fixture
def small_config() -> SimulationConfig:
    """Two simulated epochs on top of ``small_history``."""
    return SimulationConfig(
        eta=0.5,
        k=5,
        candidate_set_size=20,
        init_epochs=6,
        horizon_epochs=2,
        training_window_epochs=4,
        steps_per_epoch=5,
        seed=11,
        model_id="mostpop",
    )


@pytest.fixture
def small_experiment(tmp_path: Path, small_config: SimulationConfig) -> ExperimentConfig:
    """Experiment config writing under ``tmp_path`` with a tiny synthetic dataset."""
    return ExperimentConfig(
        simulation=small_config,
        synthetic=SyntheticSettings(users=40, items=60, epochs=8, mean_baskets=3.0),
        output_root=tmp_path / "out",
    )
