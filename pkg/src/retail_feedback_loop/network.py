"""Co-purchase networks: items linked by the buyers they share."""

from __future__ import annotations

from collections.abc import Sequence

import networkx as nx
import numpy as np
import pandas as pd
from scipy import sparse

from retail_feedback_loop.errors import EmptyLogError, MetricError
from retail_feedback_loop.interactions import InteractionLog
from retail_feedback_loop.logger import get_logger
from retail_feedback_loop.metrics import incidence_matrix

logger = get_logger(__name__)

EDGE_COLUMNS = ["item_i", "item_j", "weight"]
NODE_COLUMNS = ["item", "strength"]
N_STRATA = 4
UNCATEGORIZED = "uncategorized"


def stratified_item_sample(log: InteractionLog, size: int, seed: int = 0) -> list[str]:
    """Sample items evenly across strength quartiles.

    Items are ranked by descending strength (ties by identifier) and cut
    into four contiguous strata; each stratum contributes an equal share,
    the first strata taking the remainder.

    Returns:
        Sorted item identifiers; every item if ``size`` covers the catalog.
    """
    if size >= len(log.items):
        return sorted(log.items)
    strengths = log.strengths()
    order = np.argsort(-strengths, kind="stable")
    strata = np.array_split(order, N_STRATA)
    rng = np.random.default_rng(seed)
    quota = [size // N_STRATA + (1 if s < size % N_STRATA else 0) for s in range(N_STRATA)]
    chosen: list[int] = []
    spare = 0
    for stratum, want in zip(strata, quota, strict=True):
        take = min(len(stratum), want + spare)
        spare = want + spare - take
        chosen.extend(rng.choice(stratum, size=take, replace=False).tolist())
    return sorted(log.items[i] for i in chosen)


def _category_incidence(
    log: InteractionLog, incidence: sparse.csr_matrix
) -> tuple[sparse.csr_matrix, list[str], np.ndarray]:
    labels = [log.categories.get(item, UNCATEGORIZED) for item in log.items]
    names = sorted(set(labels))
    position = {name: c for c, name in enumerate(names)}
    columns = np.array([position[label] for label in labels], dtype=np.int64)
    grouping = sparse.csr_matrix(
        (np.ones(len(columns)), (np.arange(len(columns)), columns)),
        shape=(len(columns), len(names)),
    )
    grouped = (incidence @ grouping).tocsr()
    grouped.data[:] = 1.0
    strengths = np.bincount(columns, weights=log.strengths(), minlength=len(names))
    return grouped, names, strengths.astype(np.int64)


def copurchase_network(
    log: InteractionLog,
    item_sample: int | Sequence[str] | None = None,
    min_shared: int = 1,
    by_category: bool = False,
    seed: int = 0,
) -> nx.Graph:
    """Build the weighted co-purchase graph.

    Args:
        log: Purchases; U_i is the set of buyers of item i.
        item_sample: Keep a stratified sample of this many items, or exactly
            the listed items.
        min_shared: Smallest |U_i & U_j| that makes an edge.
        by_category: Aggregate items into their category labels first.
        seed: Seed for the item sample.

    Returns:
        Undirected graph; nodes carry ``strength``, edges carry ``weight``
        = number of shared buyers.

    Raises:
        EmptyLogError: If the log has no interactions.
        MetricError: If ``min_shared`` is below 1.
    """
    if len(log) == 0:
        raise EmptyLogError()
    if min_shared < 1:
        raise MetricError(f"min_shared must be >= 1, got {min_shared}")

    if item_sample is not None:
        if isinstance(item_sample, int):
            kept = stratified_item_sample(log, item_sample, seed)
        else:
            kept = sorted(set(item_sample))
        mask = np.isin(np.asarray(log.items), kept)[log.item_idx]
        log = log.select(mask, shrink=True).with_items(kept)

    incidence = incidence_matrix(log)
    if by_category:
        incidence, names, strengths = _category_incidence(log, incidence)
    else:
        names, strengths = list(log.items), log.strengths()

    shared = sparse.triu(incidence.T @ incidence, k=1).tocoo()
    keep = shared.data >= min_shared

    graph = nx.Graph()
    graph.add_nodes_from(
        (name, {"strength": int(s)}) for name, s in zip(names, strengths.tolist(), strict=True)
    )
    rows, cols, weights = shared.row[keep], shared.col[keep], shared.data[keep]
    graph.add_weighted_edges_from(
        (names[i], names[j], int(w))
        for i, j, w in zip(rows.tolist(), cols.tolist(), weights.tolist(), strict=True)
    )
    logger.debug(
        "Co-purchase network: %d nodes, %d edges (min_shared=%d)",
        graph.number_of_nodes(),
        graph.number_of_edges(),
        min_shared,
    )
    return graph


def edge_frame(graph: nx.Graph) -> pd.DataFrame:
    """Edge list with each pair ordered and rows sorted by the pair."""
    rows = [
        (min(a, b), max(a, b), int(data["weight"])) for a, b, data in graph.edges(data=True)
    ]
    return pd.DataFrame(sorted(rows), columns=EDGE_COLUMNS)


def node_frame(graph: nx.Graph) -> pd.DataFrame:
    rows = sorted((node, int(data["strength"])) for node, data in graph.nodes(data=True))
    return pd.DataFrame(rows, columns=NODE_COLUMNS)
