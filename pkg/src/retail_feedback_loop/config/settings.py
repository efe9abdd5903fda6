"""Experiment settings loaded from dotenv-style KEY=VALUE files."""

from __future__ import annotations

import math
from collections.abc import Callable, Iterable, Mapping
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any

from dotenv import dotenv_values

from retail_feedback_loop.config import constants
from retail_feedback_loop.errors import ConfigurationError
from retail_feedback_loop.logger import get_logger

logger = get_logger(__name__)

MODEL_IDS = ("mostpop", "itemknn", "bpr", "random", "userpop")


@dataclass(frozen=True)
class ModelSettings:
    """Recommender hyperparameters."""

    itemknn_neighborhood: int = constants.ITEMKNN_NEIGHBORHOOD
    bpr_factors: int = constants.BPR_FACTORS
    bpr_learning_rate: float = constants.BPR_LEARNING_RATE
    bpr_regularization: float = constants.BPR_REGULARIZATION
    bpr_epochs: int = constants.BPR_EPOCHS
    bpr_negatives: int = constants.BPR_NEGATIVES
    bpr_batch_size: int = constants.BPR_BATCH_SIZE

    def __post_init__(self) -> None:
        for name in ("itemknn_neighborhood", "bpr_factors", "bpr_epochs", "bpr_negatives"):
            if getattr(self, name) < 1:
                raise ConfigurationError(f"{name} must be >= 1, got {getattr(self, name)}")
        if self.bpr_batch_size < 1:
            raise ConfigurationError(f"bpr_batch_size must be >= 1, got {self.bpr_batch_size}")
        if self.bpr_learning_rate <= 0:
            raise ConfigurationError("bpr_learning_rate must be positive")
        if self.bpr_regularization < 0:
            raise ConfigurationError("bpr_regularization must be non-negative")


@dataclass(frozen=True)
class SimulationConfig:
    """Parameters of one simulation run.

    Attributes:
        eta: Adoption rate, the probability a purchase follows the ranked list.
        tau: Softmax temperature of the organic choice model.
        lambda_rarity: Strength of the rare-item boost in the utility.
        k: Ranked-list length.
        candidate_set_size: Size of each organic candidate set.
        candidate_mix: GPop / IPop / Unknown fractions of the candidate set.
        retrain_interval_epochs: Epochs between retrainings.
        training_window_epochs: Trailing epochs used for (re)training.
        init_epochs: Epochs of history before the simulation starts.
        horizon_epochs: Simulated epochs.
        steps_per_epoch: Steps (days) per epoch.
        seed: Run seed; every random stream is derived from it.
        model_id: Recommender selector.
        exclude_purchased: Drop already purchased items from ranked lists.
        gpop_scope: Rank the GPop pool by cumulative or last-epoch strength.
        evaluate_retrains: Evaluate each deployed model on the epoch it served.
        models: Recommender hyperparameters.
    """

    eta: float = constants.ETA
    tau: float = constants.TAU
    lambda_rarity: float = constants.LAMBDA_RARITY
    k: int = constants.K
    candidate_set_size: int = constants.CANDIDATE_SET_SIZE
    candidate_mix: tuple[float, float, float] = constants.CANDIDATE_MIX
    retrain_interval_epochs: int = constants.RETRAIN_INTERVAL_EPOCHS
    training_window_epochs: int = constants.TRAINING_WINDOW_EPOCHS
    init_epochs: int = constants.INIT_EPOCHS
    horizon_epochs: int = constants.HORIZON_EPOCHS
    steps_per_epoch: int = constants.STEPS_PER_EPOCH
    seed: int = constants.SEED
    model_id: str = constants.MODEL_ID
    exclude_purchased: bool = False
    gpop_scope: str = "cumulative"
    evaluate_retrains: bool = False
    models: ModelSettings = field(default_factory=ModelSettings)

    def __post_init__(self) -> None:
        if not 0.0 <= self.eta <= 1.0:
            raise ConfigurationError(f"eta must lie in [0, 1], got {self.eta}")
        if not self.tau > 0:
            raise ConfigurationError(f"tau must be positive, got {self.tau}")
        if self.lambda_rarity < 0:
            raise ConfigurationError(f"lambda_rarity must be >= 0, got {self.lambda_rarity}")
        if self.k < 1:
            raise ConfigurationError(f"k must be >= 1, got {self.k}")
        if self.candidate_set_size < 1:
            raise ConfigurationError("candidate_set_size must be >= 1")
        if len(self.candidate_mix) != 3 or any(f < 0 for f in self.candidate_mix):
            raise ConfigurationError("candidate_mix must be three non-negative fractions")
        if abs(sum(self.candidate_mix) - 1.0) > 1e-9:
            raise ConfigurationError(f"candidate_mix must sum to 1, got {sum(self.candidate_mix)}")
        if self.retrain_interval_epochs < 1:
            raise ConfigurationError("retrain_interval_epochs must be >= 1")
        if self.training_window_epochs < 1:
            raise ConfigurationError("training_window_epochs must be >= 1")
        if self.init_epochs < 1:
            raise ConfigurationError("init_epochs must be >= 1")
        if self.horizon_epochs < 0:
            raise ConfigurationError("horizon_epochs must be >= 0")
        if self.steps_per_epoch < 1:
            raise ConfigurationError("steps_per_epoch must be >= 1")
        if self.model_id not in MODEL_IDS:
            raise ConfigurationError(
                f"unknown model_id {self.model_id!r}; expected one of {', '.join(MODEL_IDS)}"
            )
        if self.gpop_scope not in constants.GPOP_SCOPES:
            raise ConfigurationError(
                f"gpop_scope must be cumulative or epoch, got {self.gpop_scope!r}"
            )

    @property
    def init_end_step(self) -> int:
        """t_0, the first simulated step."""
        return self.init_epochs * self.steps_per_epoch

    @property
    def final_step(self) -> int:
        """T, the last simulated step."""
        return (self.init_epochs + self.horizon_epochs) * self.steps_per_epoch - 1

    def with_run(self, eta: float, model_id: str, seed: int) -> SimulationConfig:
        return replace(self, eta=eta, model_id=model_id, seed=seed)

    def to_env_lines(self) -> list[str]:
        """Serialize as KEY=VALUE lines loadable by ``load_experiment_config``."""
        m = self.models
        values: dict[str, Any] = {
            "ETA": self.eta,
            "TAU": self.tau,
            "LAMBDA_RARITY": self.lambda_rarity,
            "K": self.k,
            "CANDIDATE_SET_SIZE": self.candidate_set_size,
            "CANDIDATE_MIX": self.candidate_mix,
            "RETRAIN_INTERVAL_EPOCHS": self.retrain_interval_epochs,
            "TRAINING_WINDOW_EPOCHS": self.training_window_epochs,
            "INIT_EPOCHS": self.init_epochs,
            "HORIZON_EPOCHS": self.horizon_epochs,
            "STEPS_PER_EPOCH": self.steps_per_epoch,
            "SEED": self.seed,
            "MODEL_ID": self.model_id,
            "EXCLUDE_PURCHASED": self.exclude_purchased,
            "GPOP_SCOPE": self.gpop_scope,
            "EVALUATE_RETRAINS": self.evaluate_retrains,
            "ITEMKNN_NEIGHBORHOOD": m.itemknn_neighborhood,
            "BPR_FACTORS": m.bpr_factors,
            "BPR_LEARNING_RATE": m.bpr_learning_rate,
            "BPR_REGULARIZATION": m.bpr_regularization,
            "BPR_EPOCHS": m.bpr_epochs,
            "BPR_NEGATIVES": m.bpr_negatives,
            "BPR_BATCH_SIZE": m.bpr_batch_size,
        }
        return [f"{key}={_format(value)}" for key, value in values.items()]


@dataclass(frozen=True)
class DatasetSpec:
    """Where interactions come from and how the CSV columns map.

    ``path`` None selects the synthetic generator.
    """

    path: Path | None = None
    column_user: str = constants.COLUMN_USER
    column_item: str = constants.COLUMN_ITEM
    column_timestamp: str = constants.COLUMN_TIMESTAMP
    column_quantity: str | None = constants.COLUMN_QUANTITY
    column_category: str | None = constants.COLUMN_CATEGORY
    strict: bool = True
    granularity_seconds: int = constants.GRANULARITY_SECONDS

    def __post_init__(self) -> None:
        for name in ("column_user", "column_item", "column_timestamp"):
            if not getattr(self, name):
                raise ConfigurationError(f"{name} must name a CSV column")
        if self.granularity_seconds < 1:
            raise ConfigurationError("granularity_seconds must be >= 1")


@dataclass(frozen=True)
class SyntheticSettings:
    users: int = constants.SYNTHETIC_USERS
    items: int = constants.SYNTHETIC_ITEMS
    epochs: int = constants.SYNTHETIC_EPOCHS
    exponent: float = constants.SYNTHETIC_EXPONENT
    repeat_rate: float = constants.SYNTHETIC_REPEAT_RATE
    mean_baskets: float = constants.SYNTHETIC_MEAN_BASKETS

    def __post_init__(self) -> None:
        if min(self.users, self.items, self.epochs) < 1:
            raise ConfigurationError("synthetic users, items and epochs must be positive")
        if self.exponent < 0:
            raise ConfigurationError("synthetic exponent must be >= 0")
        if not 0.0 <= self.repeat_rate <= 1.0:
            raise ConfigurationError("synthetic repeat rate must lie in [0, 1]")
        if self.mean_baskets < 1:
            raise ConfigurationError("synthetic mean baskets must be >= 1")


@dataclass(frozen=True)
class SweepSettings:
    etas: tuple[float, ...] = constants.SWEEP_ETAS
    models: tuple[str, ...] = constants.SWEEP_MODELS
    runs: int = constants.SWEEP_RUNS

    def __post_init__(self) -> None:
        if not self.etas or not self.models:
            raise ConfigurationError("sweep grids must be non-empty")
        if self.runs < 1:
            raise ConfigurationError("sweep runs must be >= 1")
        for eta in self.etas:
            if not 0.0 <= eta <= 1.0:
                raise ConfigurationError(f"sweep eta {eta} outside [0, 1]")
        for model_id in self.models:
            if model_id not in MODEL_IDS:
                raise ConfigurationError(f"unknown sweep model {model_id!r}")


@dataclass(frozen=True)
class MetricSettings:
    jaccard_exact_limit: int = constants.JACCARD_EXACT_LIMIT
    jaccard_pair_sample: int = constants.JACCARD_PAIR_SAMPLE
    network_sample: int = constants.NETWORK_SAMPLE
    network_min_shared: int = constants.NETWORK_MIN_SHARED

    def __post_init__(self) -> None:
        if self.jaccard_exact_limit < 2 or self.jaccard_pair_sample < 1:
            raise ConfigurationError("Jaccard limits must be positive")
        if self.network_sample < 1:
            raise ConfigurationError("network sample must be >= 1")
        if self.network_min_shared < 1:
            raise ConfigurationError("network min_shared must be >= 1")


@dataclass(frozen=True)
class ExperimentConfig:
    """Everything one CLI invocation needs."""

    simulation: SimulationConfig = field(default_factory=SimulationConfig)
    dataset: DatasetSpec = field(default_factory=DatasetSpec)
    synthetic: SyntheticSettings = field(default_factory=SyntheticSettings)
    sweep: SweepSettings = field(default_factory=SweepSettings)
    metrics: MetricSettings = field(default_factory=MetricSettings)
    output_root: Path = Path(constants.OUTPUT_ROOT)
    jobs: int = constants.JOBS

    def __post_init__(self) -> None:
        if self.jobs < 1:
            raise ConfigurationError(f"jobs must be >= 1, got {self.jobs}")


def _format(value: Any) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, tuple):
        return ",".join(_format(v) for v in value)
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _parse_int(key: str, raw: str) -> int:
    try:
        return int(raw.strip())
    except ValueError as err:
        raise ConfigurationError(f"{key} must be an integer, got: {raw}") from err


def _parse_float(key: str, raw: str) -> float:
    try:
        value = float(raw.strip())
    except ValueError as err:
        raise ConfigurationError(f"{key} must be a number, got: {raw}") from err
    if not math.isfinite(value):
        raise ConfigurationError(f"{key} must be finite, got: {raw}")
    return value


def _parse_bool(key: str, raw: str) -> bool:
    value = raw.strip().lower()
    if value in ("1", "true", "yes", "on"):
        return True
    if value in ("0", "false", "no", "off"):
        return False
    raise ConfigurationError(f"{key} must be true or false, got: {raw}")


def _parse_str(key: str, raw: str) -> str:
    value = raw.strip()
    if not value:
        raise ConfigurationError(f"{key} must not be empty")
    return value


def _parse_optional_str(key: str, raw: str) -> str | None:
    return raw.strip() or None


def _parse_path(key: str, raw: str) -> Path | None:
    return Path(raw.strip()) if raw.strip() else None


def _split(raw: str) -> list[str]:
    return [part.strip() for part in raw.split(",") if part.strip()]


def _parse_floats(key: str, raw: str) -> tuple[float, ...]:
    return tuple(_parse_float(key, part) for part in _split(raw))


def _parse_strs(key: str, raw: str) -> tuple[str, ...]:
    return tuple(part.lower() for part in _split(raw))


Parser = Callable[[str, str], Any]

# KEY -> (section, field, parser)
_KEYS: dict[str, tuple[str, str, Parser]] = {
    "ETA": ("simulation", "eta", _parse_float),
    "TAU": ("simulation", "tau", _parse_float),
    "LAMBDA_RARITY": ("simulation", "lambda_rarity", _parse_float),
    "K": ("simulation", "k", _parse_int),
    "CANDIDATE_SET_SIZE": ("simulation", "candidate_set_size", _parse_int),
    "CANDIDATE_MIX": ("simulation", "candidate_mix", _parse_floats),
    "RETRAIN_INTERVAL_EPOCHS": ("simulation", "retrain_interval_epochs", _parse_int),
    "TRAINING_WINDOW_EPOCHS": ("simulation", "training_window_epochs", _parse_int),
    "INIT_EPOCHS": ("simulation", "init_epochs", _parse_int),
    "HORIZON_EPOCHS": ("simulation", "horizon_epochs", _parse_int),
    "STEPS_PER_EPOCH": ("simulation", "steps_per_epoch", _parse_int),
    "SEED": ("simulation", "seed", _parse_int),
    "MODEL_ID": ("simulation", "model_id", lambda k, v: _parse_str(k, v).lower()),
    "EXCLUDE_PURCHASED": ("simulation", "exclude_purchased", _parse_bool),
    "GPOP_SCOPE": ("simulation", "gpop_scope", lambda k, v: _parse_str(k, v).lower()),
    "EVALUATE_RETRAINS": ("simulation", "evaluate_retrains", _parse_bool),
    "ITEMKNN_NEIGHBORHOOD": ("models", "itemknn_neighborhood", _parse_int),
    "BPR_FACTORS": ("models", "bpr_factors", _parse_int),
    "BPR_LEARNING_RATE": ("models", "bpr_learning_rate", _parse_float),
    "BPR_REGULARIZATION": ("models", "bpr_regularization", _parse_float),
    "BPR_EPOCHS": ("models", "bpr_epochs", _parse_int),
    "BPR_NEGATIVES": ("models", "bpr_negatives", _parse_int),
    "BPR_BATCH_SIZE": ("models", "bpr_batch_size", _parse_int),
    "DATASET_PATH": ("dataset", "path", _parse_path),
    "COLUMN_USER": ("dataset", "column_user", _parse_str),
    "COLUMN_ITEM": ("dataset", "column_item", _parse_str),
    "COLUMN_TIMESTAMP": ("dataset", "column_timestamp", _parse_str),
    "COLUMN_QUANTITY": ("dataset", "column_quantity", _parse_optional_str),
    "COLUMN_CATEGORY": ("dataset", "column_category", _parse_optional_str),
    "STRICT": ("dataset", "strict", _parse_bool),
    "GRANULARITY_SECONDS": ("dataset", "granularity_seconds", _parse_int),
    "SYNTHETIC_USERS": ("synthetic", "users", _parse_int),
    "SYNTHETIC_ITEMS": ("synthetic", "items", _parse_int),
    "SYNTHETIC_EPOCHS": ("synthetic", "epochs", _parse_int),
    "SYNTHETIC_EXPONENT": ("synthetic", "exponent", _parse_float),
    "SYNTHETIC_REPEAT_RATE": ("synthetic", "repeat_rate", _parse_float),
    "SYNTHETIC_MEAN_BASKETS": ("synthetic", "mean_baskets", _parse_float),
    "SWEEP_ETAS": ("sweep", "etas", _parse_floats),
    "SWEEP_MODELS": ("sweep", "models", _parse_strs),
    "SWEEP_RUNS": ("sweep", "runs", _parse_int),
    "OUTPUT_ROOT": ("experiment", "output_root", lambda k, v: Path(_parse_str(k, v))),
    "JOBS": ("experiment", "jobs", _parse_int),
    "JACCARD_EXACT_LIMIT": ("metrics", "jaccard_exact_limit", _parse_int),
    "JACCARD_PAIR_SAMPLE": ("metrics", "jaccard_pair_sample", _parse_int),
    "NETWORK_SAMPLE": ("metrics", "network_sample", _parse_int),
    "NETWORK_MIN_SHARED": ("metrics", "network_min_shared", _parse_int),
}

KNOWN_KEYS = frozenset(_KEYS)
SECTIONS = ("simulation", "models", "dataset", "synthetic", "sweep", "metrics", "experiment")


def parse_overrides(assignments: Iterable[str]) -> dict[str, str]:
    """Parse repeated ``KEY=VALUE`` command-line assignments.

    Raises:
        ConfigurationError: If an assignment has no ``=``.
    """
    overrides: dict[str, str] = {}
    for assignment in assignments:
        key, sep, value = assignment.partition("=")
        if not sep or not key.strip():
            raise ConfigurationError(f"expected KEY=VALUE, got: {assignment}")
        overrides[key.strip().upper()] = value
    return overrides


def _read_file(path: Path) -> dict[str, str]:
    if not path.is_file():
        raise ConfigurationError(f"config file not found: {path}")
    values: dict[str, str] = {}
    for key, value in dotenv_values(path).items():
        if value is None:
            raise ConfigurationError(f"{key} in {path} has no value")
        values[key.upper()] = value
    return values


def load_experiment_config(
    path: Path | None = None,
    overrides: Mapping[str, str] | None = None,
) -> ExperimentConfig:
    """Resolve defaults < config file < overrides into an ExperimentConfig.

    Args:
        path: Optional dotenv-style config file.
        overrides: KEY -> raw value pairs that win over the file.

    Returns:
        The validated experiment configuration.

    Raises:
        ConfigurationError: On unknown keys, unparsable values or violated invariants.
    """
    raw: dict[str, str] = _read_file(path) if path is not None else {}
    raw.update({k.upper(): v for k, v in (overrides or {}).items()})

    unknown = sorted(set(raw) - KNOWN_KEYS)
    if unknown:
        raise ConfigurationError(f"unknown configuration keys: {', '.join(unknown)}")

    sections: dict[str, dict[str, Any]] = {
        name: {}
        for name in SECTIONS
    }
    for key, value in raw.items():
        section, name, parser = _KEYS[key]
        sections[section][name] = parser(key, value)

    if "candidate_mix" in sections["simulation"]:
        mix = sections["simulation"]["candidate_mix"]
        if len(mix) != 3:
            raise ConfigurationError("CANDIDATE_MIX needs exactly three fractions")

    try:
        simulation = SimulationConfig(
            models=ModelSettings(**sections["models"]), **sections["simulation"]
        )
        config = ExperimentConfig(
            simulation=simulation,
            dataset=DatasetSpec(**sections["dataset"]),
            synthetic=SyntheticSettings(**sections["synthetic"]),
            sweep=SweepSettings(**sections["sweep"]),
            metrics=MetricSettings(**sections["metrics"]),
            **sections["experiment"],
        )
    except TypeError as err:
        raise ConfigurationError(str(err)) from err

    if path is not None:
        logger.debug("Loaded configuration from %s (%d keys)", path, len(raw))
    return config
