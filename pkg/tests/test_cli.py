"""Tests for the command-line entry point and its modes."""

from pathlib import Path

import pandas as pd
import pytest

from retail_feedback_loop.artifacts import find_run_dirs, read_run_artifact, run_dir_name
from retail_feedback_loop.config import load_experiment_config
from retail_feedback_loop.config.constants import EVAL_K
from retail_feedback_loop.errors import ConfigurationError
from retail_feedback_loop.evaluate_mode import parse_grid
from retail_feedback_loop.evaluation import evaluate
from retail_feedback_loop.ingestion import EpochWindow, load_dataset, temporal_split
from retail_feedback_loop.main import build_parser, resolve_config, run
from retail_feedback_loop.metrics import collective_gini, mean_jaccard
from retail_feedback_loop.recommenders import MostPop
from retail_feedback_loop.rng import RunStreams
from retail_feedback_loop.simulate_mode import format_aggregate
from retail_feedback_loop.sweep import AGGREGATE_FILE, SUMMARY_FILE

SMALL = {
    "SYNTHETIC_USERS": "30",
    "SYNTHETIC_ITEMS": "40",
    "SYNTHETIC_EPOCHS": "8",
    "SYNTHETIC_MEAN_BASKETS": "3",
    "STEPS_PER_EPOCH": "5",
    "HORIZON_EPOCHS": "2",
    "K": "5",
    "CANDIDATE_SET_SIZE": "20",
}


def _small_args(out: Path) -> list[str]:
    args = ["--out", str(out)]
    for key, value in SMALL.items():
        args += ["--set", f"{key}={value}"]
    return args


def _small_config(out: Path, **extra: str):  # type: ignore[no-untyped-def]
    return load_experiment_config(overrides={**SMALL, "OUTPUT_ROOT": str(out), **extra})


def _broken_csv(*_args: object) -> None:
    raise pd.errors.ParserError("Expected 3 fields in line 3, saw 4")


def _broken_model(*_args: object, **_kwargs: object) -> None:
    raise FloatingPointError("overflow in scores")


class TestArguments:
    """Tests for parsing and configuration precedence."""

    def test_flags_win_over_set(self, tmp_path: Path) -> None:
        """--eta beats --set ETA=..., which beats the file."""
        path = tmp_path / "experiment.env"
        path.write_text("ETA=0.1\nSEED=3\n", encoding="utf-8")
        args = build_parser().parse_args(
            ["simulate", "--config", str(path), "--set", "ETA=0.2", "--eta", "0.3"]
        )
        config = resolve_config(args)
        assert config.simulation.eta == 0.3
        assert config.simulation.seed == 3

    def test_lenient_flag(self) -> None:
        """--lenient switches strict parsing off."""
        config = resolve_config(build_parser().parse_args(["ingest", "--lenient"]))
        assert config.dataset.strict is False

    def test_usage_error_exit_code(self) -> None:
        """Bad arguments exit with code 1."""
        with pytest.raises(SystemExit) as excinfo:
            run(["simulate", "--eta", "high"])
        assert excinfo.value.code == 1

    def test_missing_command(self) -> None:
        """A subcommand is required."""
        with pytest.raises(SystemExit) as excinfo:
            run([])
        assert excinfo.value.code == 1

    def test_unknown_key(self, capsys: pytest.CaptureFixture[str]) -> None:
        """Unknown configuration keys exit 1 before any work."""
        assert run(["sweep", "--set", "BOGUS=1"]) == 1
        assert "Configuration error" in capsys.readouterr().err

    def test_parse_grid(self) -> None:
        """Grid entries become typed per-model value lists."""
        grids = parse_grid(["itemknn.neighborhood_size=5,10", "bpr.learning_rate=0.01"])
        assert grids == {
            "itemknn": {"neighborhood_size": [5, 10]},
            "bpr": {"learning_rate": [0.01]},
        }

    def test_parse_grid_malformed(self) -> None:
        """Entries need MODEL.PARAM and values."""
        with pytest.raises(ConfigurationError):
            parse_grid(["neighborhood_size=5"])


class TestIngestCommand:
    """Tests for ``ingest``."""

    def test_counts_match_library(self, tmp_path: Path, capsys: pytest.CaptureFixture[str]) -> None:
        """Printed filtered counts equal a library recount."""
        out = tmp_path / "out"
        assert run(["ingest", "--split", *_small_args(out)]) == 0
        expected = load_dataset(_small_config(out))
        printed = capsys.readouterr().out
        filtered = next(line for line in printed.splitlines() if "filtered" in line).split()
        counts = [len(expected.users), len(expected.items), len(expected)]
        assert filtered[1:] == [str(n) for n in counts]
        for name in ("interactions", "train", "validation", "test"):
            assert (out / "ingest" / f"{name}.csv").is_file()

    def test_ingested_log_reloads(self, tmp_path: Path) -> None:
        """The written log is itself a valid dataset."""
        out = tmp_path / "out"
        assert run(["ingest", *_small_args(out)]) == 0
        path = out / "ingest" / "interactions.csv"
        reloaded = load_dataset(_small_config(out, DATASET_PATH=str(path)))
        assert reloaded.same_events(load_dataset(_small_config(out)))

    def test_missing_dataset(self, tmp_path: Path, capsys: pytest.CaptureFixture[str]) -> None:
        """A missing file is a data error."""
        missing = f"DATASET_PATH={tmp_path / 'none.csv'}"
        code = run(["ingest", "--set", missing, "--out", str(tmp_path)])
        assert code == 2
        assert "not found" in capsys.readouterr().err


class TestEvaluateCommand:
    """Tests for ``evaluate``."""

    def test_row_matches_library(self, tmp_path: Path) -> None:
        """The MostPop row equals a direct evaluate call."""
        out = tmp_path / "out"
        assert run(["evaluate", "--model", "mostpop", *_small_args(out)]) == 0
        table = pd.read_csv(out / "evaluation.csv")
        config = _small_config(out)
        history = load_dataset(config)
        split = temporal_split(
            history,
            EpochWindow(
                history.step_range[0],
                config.simulation.init_epochs,
                config.simulation.steps_per_epoch,
            ),
        )
        seed = RunStreams(config.simulation.seed).training_seed(0)
        model = MostPop().train(split.train, seed=seed)
        expected = evaluate(model, split.train, split.test, EVAL_K)
        row = table.set_index("model").loc["mostpop"]
        assert row["ndcg"] == pytest.approx(expected.ndcg, rel=1e-9)
        assert row["recall"] == pytest.approx(expected.recall, rel=1e-9)
        assert row["users"] == expected.n_users

    def test_grid_search(self, tmp_path: Path) -> None:
        """--grid records the selected hyperparameters."""
        out = tmp_path / "out"
        args = ["evaluate", "--model", "itemknn", "--grid", "itemknn.neighborhood_size=5,10"]
        assert run([*args, *_small_args(out)]) == 0
        params = pd.read_csv(out / "evaluation.csv")["params"].iloc[0]
        assert params in ("neighborhood_size=5", "neighborhood_size=10")

    def test_malformed_grid(self, tmp_path: Path) -> None:
        """A malformed grid is a configuration error."""
        assert run(["evaluate", "--grid", "oops", *_small_args(tmp_path)]) == 1

    def test_unexpected_error_exit_code(
        self, tmp_path: Path, monkeypatch: pytest.MonkeyPatch
    ) -> None:
        """Errors from outside the library map to the runtime exit code."""
        monkeypatch.setattr("retail_feedback_loop.evaluate_mode.load_dataset", _broken_csv)
        assert run(["evaluate", *_small_args(tmp_path)]) == 3

    def test_model_crash_counts_as_failure(
        self, tmp_path: Path, monkeypatch: pytest.MonkeyPatch
    ) -> None:
        """A model raising a foreign error fails alone; all failing gives 3."""
        monkeypatch.setattr("retail_feedback_loop.evaluate_mode.create_model", _broken_model)
        assert run(["evaluate", "--model", "mostpop", *_small_args(tmp_path)]) == 3


class TestSimulationCommands:
    """Tests for ``simulate``, ``sweep`` and ``report``."""

    def test_simulate_writes_one_run(self, tmp_path: Path) -> None:
        """One run directory named after eta, model and run."""
        out = tmp_path / "out"
        assert run(["simulate", "--eta", "0.5", "--model", "mostpop", *_small_args(out)]) == 0
        assert find_run_dirs(out / "runs") == [out / "runs" / run_dir_name(0.5, "mostpop", 0)]

    def test_unexpected_error_exit_code(
        self, tmp_path: Path, monkeypatch: pytest.MonkeyPatch, capsys: pytest.CaptureFixture[str]
    ) -> None:
        """A parser error while loading ends with exit code 3, not a traceback."""
        monkeypatch.setattr("retail_feedback_loop.simulate_mode.load_dataset", _broken_csv)
        assert run(["simulate", *_small_args(tmp_path)]) == 3
        assert "Expected 3 fields" in capsys.readouterr().err

    def test_sweep_then_report(self, tmp_path: Path) -> None:
        """The report bundle recomputes from the run artifacts."""
        out = tmp_path / "out"
        grid = ["--set", "SWEEP_ETAS=0,1", "--set", "SWEEP_MODELS=mostpop", "--set", "SWEEP_RUNS=1"]
        assert run(["sweep", *grid, *_small_args(out)]) == 0
        assert (out / SUMMARY_FILE).is_file() and (out / AGGREGATE_FILE).is_file()
        assert run(["report", *_small_args(out)]) == 0

        report_dir = out / "report"
        for name in ("gini_vs_eta", "segment_gini", "jaccard_vs_epoch", "frequency_rank"):
            assert (report_dir / f"{name}.csv").is_file()
        assert (report_dir / "copurchase_post_edges.csv").is_file()

        comparison = pd.read_csv(report_dir / "comparison.csv")
        for directory in find_run_dirs(out / "runs"):
            artifact = read_run_artifact(directory)
            rows = comparison[comparison["run"] == directory.name].set_index("metric")
            simulated = rows["simulated"]
            assert simulated["collective_gini"] == pytest.approx(
                collective_gini(artifact.log), rel=1e-9
            )
            assert simulated["mean_jaccard"] == pytest.approx(
                mean_jaccard(artifact.log).mean, rel=1e-9
            )
            assert rows.loc["collective_gini", "baseline"] == pytest.approx(
                collective_gini(artifact.init_log(), items=artifact.log.items), rel=1e-9
            )

    def test_report_without_runs(self, tmp_path: Path, capsys: pytest.CaptureFixture[str]) -> None:
        """Reporting on an empty output root is a data error."""
        assert run(["report", "--out", str(tmp_path)]) == 2
        assert "missing artifact" in capsys.readouterr().err

    def test_format_aggregate(self) -> None:
        """One line per (eta, model) under the header."""
        aggregate = pd.DataFrame(
            {
                "eta": [0.0, 0.0],
                "model": ["mostpop", "mostpop"],
                "metric": ["collective_gini", "mean_jaccard"],
                "mean": [0.5, 0.1],
                "std": [0.0, 0.01],
                "count": [1, 1],
            }
        )
        lines = format_aggregate(aggregate)
        assert len(lines) == 3
        assert "0.5000 +- 0.0000" in lines[2]
        assert "n/a" in lines[2]
