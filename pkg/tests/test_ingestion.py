"""Tests for loading, filtering, splitting and synthetic data."""

from pathlib import Path

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.stats import chisquare

from retail_feedback_loop.config import DatasetSpec, ExperimentConfig
from retail_feedback_loop.errors import (
    ConfigurationError,
    DataError,
    EmptyLogError,
    RowParseError,
)
from retail_feedback_loop.ingestion import (
    EpochWindow,
    empirical_schedule,
    filter_active_users,
    generate_synthetic,
    load_interactions,
    load_raw_dataset,
    read_log_csv,
    temporal_split,
    write_log_csv,
)
from retail_feedback_loop.interactions import InteractionLog
from tests.conftest import make_log

ORDERS = (
    "customer,sku,date,qty,dept\n"
    "c1,milk,2024-01-03,2,dairy\n"
    "c2,milk,2024-01-01,1,dairy\n"
    "c1,soap,2024-01-02,1,home\n"
    "c2,tea,2024-01-05,3,\n"
)


def _write(tmp_path: Path, text: str, name: str = "orders.csv") -> Path:
    path = tmp_path / name
    path.write_text(text, encoding="utf-8")
    return path


def _spec(path: Path, strict: bool = True) -> DatasetSpec:
    return DatasetSpec(
        path=path,
        column_user="customer",
        column_item="sku",
        column_timestamp="date",
        column_quantity="qty",
        column_category="dept",
        strict=strict,
    )


class TestLoadInteractions:
    """Tests for CSV ingestion."""

    def test_dates_become_steps_from_earliest_day(self, tmp_path: Path) -> None:
        """Days are counted from the first date in the file."""
        log = load_interactions(_spec(_write(tmp_path, ORDERS)))
        assert log.step_range == (0, 4)
        assert sorted(log.steps.tolist()) == [0, 1, 2, 4]
        assert log.total_quantity == 7

    def test_categories_read_when_present(self, tmp_path: Path) -> None:
        """Blank labels are skipped."""
        log = load_interactions(_spec(_write(tmp_path, ORDERS)))
        assert log.categories == {"milk": "dairy", "soap": "home"}

    def test_epoch_seconds_accepted(self, tmp_path: Path) -> None:
        """Numeric timestamps are seconds since the epoch."""
        text = "user,item,timestamp\na,x,86400\nb,y,259200\n"
        log = load_interactions(DatasetSpec(path=_write(tmp_path, text)))
        assert sorted(log.steps.tolist()) == [0, 2]

    def test_hourly_granularity(self, tmp_path: Path) -> None:
        """A one-hour granularity turns hours into steps."""
        text = "user,item,timestamp\na,x,2024-01-01T00:30:00\nb,y,2024-01-01T03:10:00\n"
        spec = DatasetSpec(path=_write(tmp_path, text), granularity_seconds=3600)
        assert sorted(load_interactions(spec).steps.tolist()) == [0, 3]

    def test_missing_quantity_column_defaults_to_one(self, tmp_path: Path) -> None:
        """Without a quantity column every row buys one unit."""
        text = "user,item,timestamp\na,x,2024-01-01\na,y,2024-01-01\n"
        log = load_interactions(DatasetSpec(path=_write(tmp_path, text)))
        assert log.quantities.tolist() == [1, 1]

    def test_missing_column_is_configuration_error(self, tmp_path: Path) -> None:
        """Mapped columns must exist in the header."""
        path = _write(tmp_path, ORDERS)
        with pytest.raises(ConfigurationError, match="customer_id"):
            load_interactions(DatasetSpec(path=path, column_user="customer_id"))

    def test_strict_mode_reports_row(self, tmp_path: Path) -> None:
        """The first bad row aborts strict ingestion."""
        path = _write(tmp_path, ORDERS + "c3,milk,not-a-date,1,dairy\n")
        with pytest.raises(RowParseError) as excinfo:
            load_interactions(_spec(path))
        assert excinfo.value.row == 5
        assert "timestamp" in excinfo.value.reason

    def test_lenient_mode_skips_rows(self, tmp_path: Path) -> None:
        """Lenient ingestion drops bad rows and keeps the rest."""
        path = _write(tmp_path, ORDERS + "c3,milk,2024-01-02,0,dairy\n,milk,2024-01-02,1,\n")
        log = load_interactions(_spec(path, strict=False))
        assert len(log) == 4
        assert "c3" not in log.users

    def test_strict_mode_reports_wrong_field_count(self, tmp_path: Path) -> None:
        """A row with an extra field aborts strict ingestion with its row number."""
        text = "user,item,timestamp\nu1,a,2020-01-01\nu2,b,2020-01-02,EXTRA\nu3,c,2020-01-03\n"
        with pytest.raises(RowParseError) as excinfo:
            load_interactions(DatasetSpec(path=_write(tmp_path, text)))
        assert excinfo.value.row == 2
        assert "fields" in excinfo.value.reason

    def test_lenient_mode_skips_wrong_field_count(self, tmp_path: Path) -> None:
        """Rows with extra or missing fields are dropped in lenient mode."""
        text = (
            "user,item,timestamp\nu1,a,2020-01-01\nu2,b,2020-01-02,EXTRA\nu3,c,2020-01-03\nu4,d\n"
        )
        log = load_interactions(DatasetSpec(path=_write(tmp_path, text), strict=False))
        assert len(log) == 2
        assert log.users == ("u1", "u3")

    def test_missing_file(self, tmp_path: Path) -> None:
        """A missing dataset is a data error."""
        with pytest.raises(DataError, match="not found"):
            load_interactions(DatasetSpec(path=tmp_path / "absent.csv"))

    def test_header_only(self, tmp_path: Path) -> None:
        """A file without rows is empty."""
        with pytest.raises(EmptyLogError):
            load_interactions(DatasetSpec(path=_write(tmp_path, "user,item,timestamp\n")))


class TestFilterActiveUsers:
    """Tests for the continuity filter."""

    def test_drops_users_missing_a_window(self, toy_log: InteractionLog) -> None:
        """carol buys only in the second window."""
        filtered = filter_active_users(toy_log, epoch_length=3)
        assert filtered.users == ("alice", "bob")
        assert filtered.items == ("apple", "bread", "cheese")
        assert filtered.step_range == toy_log.step_range

    def test_empty_log(self) -> None:
        """Filtering needs interactions."""
        with pytest.raises(EmptyLogError):
            filter_active_users(InteractionLog.empty(["u"], ["i"]), 3)

    @given(
        st.lists(
            st.tuples(st.sampled_from("abcd"), st.sampled_from("xyz"), st.integers(0, 9)),
            min_size=1,
            max_size=40,
        )
    )
    def test_keeps_exactly_the_continuous_users(
        self, rows: list[tuple[str, str, int]]
    ) -> None:
        """Kept users are those with events in both five-step windows."""
        log = make_log(rows, step_range=(0, 9))
        expected = sorted(
            user
            for user in {r[0] for r in rows}
            if {r[2] // 5 for r in rows if r[0] == user} == {0, 1}
        )
        assert list(filter_active_users(log, 5).users) == expected


class TestTemporalSplit:
    """Tests for the 4/1/1 epoch split."""

    def test_epoch_edges(self, small_history: InteractionLog) -> None:
        """Six epochs of five steps split on their boundaries."""
        split = temporal_split(small_history, EpochWindow(0, 6, 5))
        assert split.train.step_range == (0, 19)
        assert split.validation.step_range == (20, 24)
        assert split.test.step_range == (25, 29)
        assert len(split.train) + len(split.validation) + len(split.test) == len(
            small_history.between(0, 29)
        )

    def test_needs_enough_epochs(self, small_history: InteractionLog) -> None:
        """Fewer than six epochs cannot hold the default split."""
        with pytest.raises(DataError, match="at least 6"):
            temporal_split(small_history, EpochWindow(0, 5, 5))

    def test_epoch_window(self) -> None:
        """Window arithmetic in steps."""
        window = EpochWindow(10, 3, 5)
        assert window.end_step == 24
        assert window.epoch_range(1) == (15, 19)
        assert window.epoch_range(0, 2) == (10, 19)


class TestEmpiricalSchedule:
    """Tests for replaying historical activity."""

    def test_baskets_per_step(self, toy_log: InteractionLog) -> None:
        """Basket sizes sum quantities per user and step."""
        schedule = empirical_schedule(toy_log, 3, 5)
        assert schedule.at(3) == (("carol", 1),)
        assert schedule.at(5) == (("alice", 1), ("carol", 1))
        assert schedule.total_basket_mass == 4

    def test_horizon_outside_log(self, toy_log: InteractionLog) -> None:
        """The horizon must lie inside the log's range."""
        with pytest.raises(DataError, match="outside log step range"):
            empirical_schedule(toy_log, 3, 8)


class TestSyntheticAndFiles:
    """Tests for the generator and log files."""

    def test_deterministic(self) -> None:
        """Equal seeds give identical logs."""
        first = generate_synthetic(10, 15, 3, 1.2, seed=3, steps_per_epoch=4)
        second = generate_synthetic(10, 15, 3, 1.2, seed=3, steps_per_epoch=4)
        assert first.same_events(second)

    def test_continuity_complete(self, small_history: InteractionLog) -> None:
        """Every synthetic user is active in every epoch."""
        assert len(small_history.users) == 40
        assert len(small_history.items) == 60
        assert filter_active_users(small_history, 5).users == small_history.users

    def test_zero_exponent_is_uniform(self) -> None:
        """Without a popularity prior item frequencies pass a uniformity test."""
        log = generate_synthetic(
            200, 50, 10, 0.0, seed=11, steps_per_epoch=5, repeat_rate=0.0, mean_baskets=6.0
        )
        assert len(log) >= 10_000
        assert len(log.items) == 50
        counts = np.bincount(log.item_idx, minlength=len(log.items))
        assert chisquare(counts).pvalue > 0.01

    def test_categories(self) -> None:
        """Category labels cycle over the catalog."""
        log = generate_synthetic(5, 6, 1, 0.0, seed=1, steps_per_epoch=2, n_categories=2)
        assert set(log.categories.values()) == {"c001", "c002"}

    def test_invalid_counts(self) -> None:
        """Counts must be positive."""
        with pytest.raises(ConfigurationError):
            generate_synthetic(0, 5, 1, 1.0, seed=1)

    def test_log_file_round_trip(self, tmp_path: Path, toy_log: InteractionLog) -> None:
        """A written log reads back with the same events."""
        path = tmp_path / "log.csv"
        write_log_csv(toy_log, path)
        assert read_log_csv(path, step_range=toy_log.step_range).same_events(toy_log)

    def test_load_raw_dataset_reads_ingested_log(
        self, tmp_path: Path, toy_log: InteractionLog
    ) -> None:
        """Normalized logs are recognised by their header."""
        path = tmp_path / "interactions.csv"
        write_log_csv(toy_log.between(2, 5), path)
        log = load_raw_dataset(ExperimentConfig(dataset=DatasetSpec(path=path)))
        assert log.step_range == (0, 5)
        assert len(log) == len(toy_log.between(2, 5))
