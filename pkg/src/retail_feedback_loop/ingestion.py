"""Loading, filtering and splitting interaction data; synthetic datasets."""

from __future__ import annotations

import math
import re
from collections.abc import Mapping
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import numpy.typing as npt
import pandas as pd

from retail_feedback_loop.config import constants
from retail_feedback_loop.config.settings import DatasetSpec, ExperimentConfig
from retail_feedback_loop.errors import ConfigurationError, DataError, EmptyLogError, RowParseError
from retail_feedback_loop.interactions import ActivitySchedule, InteractionLog, Source
from retail_feedback_loop.logger import get_logger

logger = get_logger(__name__)

LOG_COLUMNS = ("user", "item", "step", "quantity", "source")
_BAD_LINE = re.compile(r"line (\d+)")


def build_log(
    users: npt.ArrayLike,
    items: npt.ArrayLike,
    steps: npt.ArrayLike,
    quantities: npt.ArrayLike,
    sources: npt.ArrayLike,
    step_range: tuple[int, int] | None = None,
    categories: Mapping[str, str] | None = None,
) -> InteractionLog:
    """Build a log from parallel columns, sorting stably by step."""
    user_col = np.asarray(users, dtype=str)
    item_col = np.asarray(items, dtype=str)
    step_col = np.asarray(steps, dtype=np.int64)
    order = np.argsort(step_col, kind="stable")
    user_universe, user_idx = np.unique(user_col, return_inverse=True)
    item_universe, item_idx = np.unique(item_col, return_inverse=True)
    if step_range is None:
        step_range = (int(step_col.min()), int(step_col.max())) if len(step_col) else (0, 0)
    return InteractionLog(
        users=tuple(str(u) for u in user_universe),
        items=tuple(str(i) for i in item_universe),
        user_idx=user_idx.astype(np.int64)[order],
        item_idx=item_idx.astype(np.int64)[order],
        steps=step_col[order],
        quantities=np.asarray(quantities, dtype=np.int64)[order],
        sources=np.asarray(sources, dtype=np.int64)[order],
        step_range=step_range,
        categories=dict(categories or {}),
    )


def _parse_timestamps(raw: pd.Series, granularity_seconds: int) -> pd.Series:
    """Map ISO-8601 dates or epoch seconds to integer periods; NaN where unparsable."""
    numeric = pd.to_numeric(raw, errors="coerce")
    seconds = numeric.astype("float64")
    textual = numeric.isna() & (raw.str.strip() != "")
    if textual.any():
        parsed = pd.to_datetime(raw[textual], errors="coerce", utc=True, format="ISO8601")
        valid = parsed.notna()
        epoch = pd.Series(np.nan, index=parsed.index)
        epoch[valid] = (parsed[valid] - pd.Timestamp(0, tz="UTC")) / pd.Timedelta(seconds=1)
        seconds[textual] = epoch
    return np.floor(seconds / granularity_seconds)


def _read_rows(spec: DatasetSpec) -> tuple[pd.DataFrame, int]:
    """Read the raw CSV as strings.

    Returns:
        The frame and the number of lines skipped for a wrong field count
        (always 0 in strict mode).

    Raises:
        RowParseError: If a line has the wrong field count in strict mode.
        DataError: If the file is not parsable CSV.
    """
    assert spec.path is not None
    skipped: list[list[str]] = []

    def skip_line(fields: list[str]) -> None:
        skipped.append(fields)

    try:
        if spec.strict:
            frame = pd.read_csv(spec.path, dtype=str, keep_default_na=False)
        else:
            frame = pd.read_csv(
                spec.path,
                dtype=str,
                keep_default_na=False,
                engine="python",
                on_bad_lines=skip_line,
            )
    except pd.errors.ParserError as e:
        match = _BAD_LINE.search(str(e))
        if spec.strict and match:
            # File line 1 is the header.
            raise RowParseError(int(match.group(1)) - 1, "wrong number of fields") from e
        raise DataError(f"cannot parse {spec.path}: {e}") from e
    return frame.fillna(""), len(skipped)


def load_interactions(spec: DatasetSpec) -> InteractionLog:
    """Read an interaction CSV into a historical log.

    Timestamps become consecutive integer steps (days by default) counted
    from the earliest date. Every event is tagged ``historical``.

    Args:
        spec: Dataset location, column mapping and parse mode.

    Returns:
        Step-sorted interaction log.

    Raises:
        ConfigurationError: If a mapped column is missing from the header.
        RowParseError: If a row cannot be parsed in strict mode.
        EmptyLogError: If no usable rows remain.
    """
    if spec.path is None:
        raise ConfigurationError("no dataset path configured")
    if not spec.path.is_file():
        raise DataError(f"dataset not found: {spec.path}")

    frame, malformed = _read_rows(spec)
    required = [spec.column_user, spec.column_item, spec.column_timestamp]
    missing = [c for c in required if c not in frame.columns]
    if missing:
        raise ConfigurationError(
            f"column(s) {', '.join(missing)} not found in {spec.path}; "
            f"header has {', '.join(frame.columns)}"
        )
    if frame.empty:
        raise EmptyLogError(f"no interactions in {spec.path}")

    users = frame[spec.column_user].str.strip()
    items = frame[spec.column_item].str.strip()
    periods = _parse_timestamps(frame[spec.column_timestamp], spec.granularity_seconds)
    if spec.column_quantity and spec.column_quantity in frame.columns:
        quantities = pd.to_numeric(frame[spec.column_quantity], errors="coerce")
    else:
        quantities = pd.Series(1.0, index=frame.index)

    reasons = pd.Series("", index=frame.index)
    reasons[(quantities.isna()) | (quantities < 1) | (quantities % 1 != 0)] = "invalid quantity"
    reasons[periods.isna()] = "unparsable timestamp"
    reasons[items == ""] = "empty item identifier"
    reasons[users == ""] = "empty user identifier"
    bad = reasons != ""
    if spec.strict and bad.any():
        first = int(np.flatnonzero(bad.to_numpy())[0])
        # Row numbers count data rows from 1, header excluded.
        raise RowParseError(first + 1, f"{reasons.iloc[first]} ({frame.iloc[first].to_dict()})")
    skipped = int(bad.sum()) + malformed
    if skipped:
        logger.warning("Skipped %d unparsable row(s) in %s", skipped, spec.path)

    keep = ~bad
    if not keep.any():
        raise EmptyLogError(f"no parsable interactions in {spec.path}")
    periods = periods[keep].astype(np.int64)
    steps = periods - int(periods.min())

    categories: dict[str, str] = {}
    if spec.column_category and spec.column_category in frame.columns:
        labels = frame.loc[keep, [spec.column_item, spec.column_category]]
        for item, label in zip(items[keep], labels[spec.column_category].str.strip(), strict=True):
            if label and item not in categories:
                categories[item] = label

    log = build_log(
        users[keep].to_numpy(),
        items[keep].to_numpy(),
        steps.to_numpy(),
        quantities[keep].astype(np.int64).to_numpy(),
        np.full(int(keep.sum()), int(Source.HISTORICAL)),
        step_range=(0, int(steps.max())),
        categories=categories,
    )
    logger.info(
        "Loaded %d interactions (%d users, %d items, %d steps) from %s",
        len(log),
        len(log.users),
        len(log.items),
        log.step_range[1] + 1,
        spec.path,
    )
    return log


def n_windows(step_range: tuple[int, int], epoch_length: int) -> int:
    return math.ceil((step_range[1] - step_range[0] + 1) / epoch_length)


def filter_active_users(log: InteractionLog, epoch_length: int) -> InteractionLog:
    """Keep users with at least one purchase in every epoch window of the log.

    Windows of ``epoch_length`` steps tile the declared step range from its
    start. Users and items left without events are dropped.

    Raises:
        EmptyLogError: If the input log is empty.
    """
    if len(log) == 0:
        raise EmptyLogError()
    windows = n_windows(log.step_range, epoch_length)
    window_idx = (log.steps - log.step_range[0]) // epoch_length
    pairs = np.unique(log.user_idx * windows + window_idx)
    coverage = np.bincount(pairs // windows, minlength=len(log.users))
    active = coverage == windows
    filtered = log.select(active[log.user_idx], shrink=True)
    logger.info(
        "Continuity filter kept %d of %d users (%d of %d items) over %d windows",
        len(filtered.users),
        len(log.users),
        len(filtered.items),
        len(log.items),
        windows,
    )
    return filtered


@dataclass(frozen=True)
class EpochWindow:
    """``n_epochs`` consecutive epochs of ``epoch_length`` steps from ``start_step``."""

    start_step: int
    n_epochs: int
    epoch_length: int = constants.STEPS_PER_EPOCH

    @property
    def end_step(self) -> int:
        return self.start_step + self.n_epochs * self.epoch_length - 1

    def epoch_range(self, offset: int, count: int = 1) -> tuple[int, int]:
        start = self.start_step + offset * self.epoch_length
        return start, start + count * self.epoch_length - 1


@dataclass(frozen=True)
class Split:
    train: InteractionLog
    validation: InteractionLog
    test: InteractionLog


def temporal_split(
    log: InteractionLog,
    window: EpochWindow,
    min_train_epochs: int = constants.TRAIN_EPOCHS_IN_SPLIT,
) -> Split:
    """Split a window into train / validation / test on epoch edges.

    The last two epochs of the window are validation and test; all earlier
    epochs are training (4/1/1 for a six-epoch window).

    Raises:
        DataError: If the window holds fewer than ``min_train_epochs + 2`` epochs.
    """
    held_out = constants.VALIDATION_EPOCHS_IN_SPLIT + constants.TEST_EPOCHS_IN_SPLIT
    needed = min_train_epochs + held_out
    if window.n_epochs < needed:
        raise DataError(
            f"temporal split needs at least {needed} epochs, window has {window.n_epochs}"
        )
    train_epochs = window.n_epochs - 2
    train_range = window.epoch_range(0, train_epochs)
    validation_range = window.epoch_range(train_epochs)
    test_range = window.epoch_range(train_epochs + 1)
    return Split(
        train=log.between(*train_range),
        validation=log.between(*validation_range),
        test=log.between(*test_range),
    )


def empirical_schedule(log: InteractionLog, start: int, end: int) -> ActivitySchedule:
    """Replay who purchased how much on each step of ``[start, end]``.

    Raises:
        DataError: If the horizon is not inside the log's step range.
    """
    lo, hi = log.step_range
    if start < lo or end > hi or end < start:
        raise DataError(f"horizon [{start}, {end}] outside log step range [{lo}, {hi}]")
    window = log.between(start, end)
    baskets: dict[int, list[tuple[str, int]]] = {}
    key = window.steps * len(log.users) + window.user_idx
    unique_keys, inverse = np.unique(key, return_inverse=True)
    sizes = np.bincount(inverse, weights=window.quantities).astype(np.int64)
    for k, size in zip(unique_keys.tolist(), sizes.tolist(), strict=True):
        step, user = divmod(k, len(log.users))
        baskets.setdefault(step, []).append((log.users[user], size))
    return ActivitySchedule(
        start_step=start,
        end_step=end,
        baskets={step: tuple(entries) for step, entries in baskets.items()},
    )


def _identifiers(prefix: str, n: int) -> list[str]:
    width = max(4, len(str(n)))
    return [f"{prefix}{i:0{width}d}" for i in range(1, n + 1)]


def generate_synthetic(
    n_users: int,
    n_items: int,
    n_epochs: int,
    popularity_exponent: float,
    seed: int,
    steps_per_epoch: int = constants.STEPS_PER_EPOCH,
    repeat_rate: float = constants.SYNTHETIC_REPEAT_RATE,
    mean_baskets: float = constants.SYNTHETIC_MEAN_BASKETS,
    n_categories: int = 0,
) -> InteractionLog:
    """Generate a continuity-complete purchase log with a power-law item prior.

    Every user buys at least once per epoch. Item j of a random popularity
    ranking is drawn with probability proportional to ``(rank + 1) ** -exponent``;
    with probability ``repeat_rate`` a purchase instead repeats an item from
    the user's own history.

    Args:
        n_users: Number of users.
        n_items: Number of items.
        n_epochs: Number of epochs; the step range is ``[0, n_epochs * L - 1]``.
        popularity_exponent: Power-law exponent; 0 gives a uniform prior.
        seed: Generator seed.
        steps_per_epoch: Epoch length L in steps.
        repeat_rate: Probability of repurchasing an already bought item.
        mean_baskets: Mean purchases per user and epoch (at least 1).
        n_categories: If positive, items get round-robin category labels.

    Returns:
        The synthetic historical log.
    """
    if min(n_users, n_items, n_epochs, steps_per_epoch) < 1:
        raise ConfigurationError("synthetic counts must be positive")
    if popularity_exponent < 0:
        raise ConfigurationError("popularity exponent must be >= 0")

    rng = np.random.default_rng(seed)
    users = _identifiers("u", n_users)
    items = _identifiers("i", n_items)
    ranks = rng.permutation(n_items)
    prior = (ranks + 1.0) ** -popularity_exponent
    prior /= prior.sum()

    user_cols: list[npt.NDArray[np.int64]] = []
    item_cols: list[npt.NDArray[np.int64]] = []
    step_cols: list[npt.NDArray[np.int64]] = []
    history: list[list[int]] = [[] for _ in range(n_users)]
    for epoch in range(n_epochs):
        counts = 1 + rng.poisson(max(mean_baskets - 1.0, 0.0), size=n_users)
        buyers = np.repeat(np.arange(n_users), counts)
        steps = epoch * steps_per_epoch + rng.integers(0, steps_per_epoch, size=len(buyers))
        picks = rng.choice(n_items, size=len(buyers), p=prior)
        if repeat_rate > 0:
            repeats = rng.random(len(buyers)) < repeat_rate
            for n in np.flatnonzero(repeats).tolist():
                past = history[buyers[n]]
                if past:
                    picks[n] = past[int(rng.integers(len(past)))]
        for buyer, pick in zip(buyers.tolist(), picks.tolist(), strict=True):
            history[buyer].append(pick)
        user_cols.append(buyers)
        item_cols.append(picks)
        step_cols.append(steps)

    user_idx = np.concatenate(user_cols)
    item_idx = np.concatenate(item_cols)
    categories = (
        {item: f"c{j % n_categories + 1:03d}" for j, item in enumerate(items)}
        if n_categories > 0
        else {}
    )
    log = build_log(
        np.array(users)[user_idx],
        np.array(items)[item_idx],
        np.concatenate(step_cols),
        np.ones(len(user_idx), dtype=np.int64),
        np.full(len(user_idx), int(Source.HISTORICAL)),
        step_range=(0, n_epochs * steps_per_epoch - 1),
        categories=categories,
    )
    return log.with_items(items)


def write_log_csv(log: InteractionLog, path: Path) -> None:
    """Write a log as CSV with columns user, item, step, quantity, source."""
    frame = pd.DataFrame(
        {
            "user": [log.users[i] for i in log.user_idx.tolist()],
            "item": [log.items[i] for i in log.item_idx.tolist()],
            "step": log.steps,
            "quantity": log.quantities,
            "source": [Source(s).label for s in log.sources.tolist()],
        },
        columns=list(LOG_COLUMNS),
    )
    path.parent.mkdir(parents=True, exist_ok=True)
    frame.to_csv(path, index=False, lineterminator="\n")


def write_categories_csv(categories: Mapping[str, str], path: Path) -> None:
    frame = pd.DataFrame(sorted(categories.items()), columns=["item", "category"])
    frame.to_csv(path, index=False, lineterminator="\n")


def read_log_csv(
    path: Path,
    step_range: tuple[int, int] | None = None,
    categories_path: Path | None = None,
) -> InteractionLog:
    """Read a log written by ``write_log_csv``.

    Raises:
        DataError: If the file is missing or lacks the log columns.
    """
    if not path.is_file():
        raise DataError(f"log file not found: {path}")
    frame = pd.read_csv(path, dtype={"user": str, "item": str}, keep_default_na=False)
    missing = [c for c in LOG_COLUMNS if c not in frame.columns]
    if missing:
        raise DataError(f"{path} lacks column(s) {', '.join(missing)}")
    categories: dict[str, str] = {}
    if categories_path is not None and categories_path.is_file():
        labels = pd.read_csv(categories_path, dtype=str, keep_default_na=False)
        categories = dict(zip(labels["item"], labels["category"], strict=True))
    return build_log(
        frame["user"].to_numpy(),
        frame["item"].to_numpy(),
        frame["step"].to_numpy(),
        frame["quantity"].to_numpy(),
        np.array([int(Source.from_label(s)) for s in frame["source"]], dtype=np.int64),
        step_range=step_range,
        categories=categories,
    )


def _is_normalized_log(path: Path) -> bool:
    header = pd.read_csv(path, nrows=0).columns
    return all(column in header for column in LOG_COLUMNS)


def load_raw_dataset(config: ExperimentConfig) -> InteractionLog:
    """The configured history before filtering.

    Reads the CSV dataset, or a log written by ``ingest``, or generates a
    synthetic log seeded with the top-level seed when no path is set.
    """
    spec = config.dataset
    if spec.path is None:
        synthetic = config.synthetic
        logger.info(
            "Generating synthetic history: %d users, %d items, %d epochs",
            synthetic.users,
            synthetic.items,
            synthetic.epochs,
        )
        return generate_synthetic(
            synthetic.users,
            synthetic.items,
            synthetic.epochs,
            synthetic.exponent,
            config.simulation.seed,
            steps_per_epoch=config.simulation.steps_per_epoch,
            repeat_rate=synthetic.repeat_rate,
            mean_baskets=synthetic.mean_baskets,
        )
    if spec.path.is_file() and _is_normalized_log(spec.path):
        log = read_log_csv(spec.path, categories_path=spec.path.with_name("categories.csv"))
        # ingest counts steps from the earliest raw timestamp
        return log.with_step_range((0, log.step_range[1]))
    return load_interactions(spec)


def load_dataset(config: ExperimentConfig) -> InteractionLog:
    """The configured history with the continuity filter applied."""
    return filter_active_users(load_raw_dataset(config), config.simulation.steps_per_epoch)
