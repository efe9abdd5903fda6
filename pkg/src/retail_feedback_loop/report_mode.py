"""Report mode - turn run artifacts into plot-ready CSV tables."""

from __future__ import annotations

import sys
from pathlib import Path

import pandas as pd

from retail_feedback_loop.artifacts import (
    FLOAT_FORMAT,
    RunArtifact,
    find_run_dirs,
    read_run_artifact,
)
from retail_feedback_loop.config import ExperimentConfig, MetricSettings
from retail_feedback_loop.errors import SimulatorError
from retail_feedback_loop.logger import get_logger
from retail_feedback_loop.metrics import RankBy, Segment, frequency_rank, report, segment_users
from retail_feedback_loop.network import (
    copurchase_network,
    edge_frame,
    node_frame,
    stratified_item_sample,
)

logger = get_logger(__name__)

REPORT_DIR = "report"
GROUP_KEYS = ["eta", "model", "metric"]
GINI_METRICS = ("mean_individual_gini", "collective_gini")
SEGMENT_METRICS = tuple(f"gini_{segment.value}" for segment in Segment)
CURVE_MEASURES: tuple[RankBy, ...] = ("strength", "popularity")


def _write(frame: pd.DataFrame, path: Path) -> None:
    frame.to_csv(path, index=False, float_format=FLOAT_FORMAT, lineterminator="\n")


def _across_runs(metrics: pd.DataFrame, names: tuple[str, ...], by_epoch: bool) -> pd.DataFrame:
    """Mean and standard deviation over runs, final epoch unless ``by_epoch``."""
    rows = metrics[metrics["metric"].isin(names)]
    keys = ["epoch", *GROUP_KEYS] if by_epoch else GROUP_KEYS
    if not by_epoch:
        last = rows.groupby(["eta", "model", "run"])["epoch"].transform("max")
        rows = rows[rows["epoch"] == last]
    table = rows.groupby(keys, sort=True)["value"].agg(["mean", "std", "count"]).reset_index()
    table["std"] = table["std"].fillna(0.0)
    return table.rename(columns={"count": "runs"})


def segment_table(metrics: pd.DataFrame) -> pd.DataFrame:
    """Per-segment Gini before the simulation and after it, across runs."""
    rows = metrics[metrics["metric"].isin(SEGMENT_METRICS)]
    baseline = (
        rows[rows["epoch"] == 0]
        .groupby(GROUP_KEYS, sort=True)["value"]
        .mean()
        .rename("baseline")
        .reset_index()
    )
    final = _across_runs(metrics, SEGMENT_METRICS, by_epoch=False)
    table = final.merge(baseline, on=GROUP_KEYS, how="left")
    table["segment"] = table["metric"].str.removeprefix("gini_")
    return table[["eta", "model", "segment", "baseline", "mean", "std", "runs"]]


def _run_label(artifact: RunArtifact) -> str:
    return artifact.directory.name


def _curves(artifact: RunArtifact) -> pd.DataFrame:
    frames = []
    for side, log in (("baseline", artifact.init_log()), ("simulated", artifact.log)):
        for measure in CURVE_MEASURES:
            points = frequency_rank(log, measure)
            frames.append(
                pd.DataFrame(
                    {
                        "curve": f"{_run_label(artifact)}:{side}:{measure}",
                        "rank": [p.rank for p in points],
                        "item": [p.item for p in points],
                        "value": [p.value for p in points],
                    }
                )
            )
    return pd.concat(frames, ignore_index=True)


def _networks(
    artifact: RunArtifact, settings: MetricSettings
) -> dict[str, tuple[pd.DataFrame, pd.DataFrame]]:
    """Pre- and post-simulation networks over one item sample."""
    sample = stratified_item_sample(
        artifact.log, settings.network_sample, seed=artifact.config.seed
    )
    by_category = bool(artifact.log.categories)
    networks = {}
    for side, log in (("pre", artifact.init_log()), ("post", artifact.log)):
        graph = copurchase_network(
            log,
            item_sample=sample,
            min_shared=settings.network_min_shared,
            by_category=by_category,
        )
        edges, nodes = edge_frame(graph), node_frame(graph)
        edges.insert(0, "run", _run_label(artifact))
        nodes.insert(0, "run", _run_label(artifact))
        networks[side] = (edges, nodes)
    return networks


def _comparison(artifact: RunArtifact, settings: MetricSettings) -> pd.DataFrame:
    baseline = artifact.init_log()
    comparison = report(
        baseline,
        artifact.log,
        segment_users(baseline),
        k=artifact.config.k,
        jaccard_exact_limit=settings.jaccard_exact_limit,
    )
    base, sim = comparison.baseline.scalars(), comparison.simulated.scalars()
    return pd.DataFrame(
        {
            "run": _run_label(artifact),
            "eta": artifact.config.eta,
            "model": artifact.config.model_id,
            "metric": list(comparison.deltas),
            "baseline": [base[m] for m in comparison.deltas],
            "simulated": [sim[m] for m in comparison.deltas],
            "delta": list(comparison.deltas.values()),
        }
    )


def build_bundle(
    artifacts: list[RunArtifact], settings: MetricSettings, out_dir: Path
) -> list[Path]:
    """Write every table of the figure-data bundle and return their paths."""
    out_dir.mkdir(parents=True, exist_ok=True)
    metrics = pd.concat([a.metrics for a in artifacts], ignore_index=True)
    tables: dict[str, pd.DataFrame] = {
        "gini_vs_eta.csv": _across_runs(metrics, GINI_METRICS, by_epoch=False),
        "segment_gini.csv": segment_table(metrics),
        "jaccard_vs_eta.csv": _across_runs(metrics, ("mean_jaccard",), by_epoch=False),
        "jaccard_vs_epoch.csv": _across_runs(metrics, ("mean_jaccard",), by_epoch=True),
        "frequency_rank.csv": pd.concat([_curves(a) for a in artifacts], ignore_index=True),
        "comparison.csv": pd.concat(
            [_comparison(a, settings) for a in artifacts], ignore_index=True
        ),
    }
    networks = [_networks(a, settings) for a in artifacts]
    for side in ("pre", "post"):
        tables[f"copurchase_{side}_edges.csv"] = pd.concat(
            [n[side][0] for n in networks], ignore_index=True
        )
        tables[f"copurchase_{side}_nodes.csv"] = pd.concat(
            [n[side][1] for n in networks], ignore_index=True
        )

    written = []
    for name, frame in tables.items():
        _write(frame, out_dir / name)
        written.append(out_dir / name)
    return written


def run_report_mode(config: ExperimentConfig, runs_root: str | None = None) -> int:
    """Read run artifacts and write the figure-data bundle.

    Args:
        config: Experiment configuration (output root and network options).
        runs_root: Directory holding run artifacts; defaults to ``<out>/runs``.

    Returns:
        Exit code (0 for success, non-zero for failure).
    """
    print("Report Mode")
    print("=" * 40)
    root = Path(runs_root) if runs_root else config.output_root / "runs"
    try:
        artifacts = [read_run_artifact(d) for d in find_run_dirs(root)]
        print(f"Runs: {len(artifacts)} from {root}")
        written = build_bundle(artifacts, config.metrics, config.output_root / REPORT_DIR)
    except SimulatorError as e:
        print(f"\nError: {e}", file=sys.stderr)
        return e.exit_code
    except Exception as e:
        logger.exception("Report failed")
        print(f"\nError: {e}", file=sys.stderr)
        return 3

    for path in written:
        print(f"  {path}")
    return 0
