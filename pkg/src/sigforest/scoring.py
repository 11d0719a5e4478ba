"""Tree traversal, expected path depths and the anomaly score.

Scores live in (-1, 0); lower means more anomalous.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .dataset import as_matrix
from .depth import expected_depth
from .errors import DimensionMismatchError
from .forest import ForestModel, IsolationTree, resolve_workers


@dataclass(frozen=True)
class SplitRecord:
    feature: int
    parent_size: int
    child_size: int


@dataclass
class PathTrace:
    records: list[SplitRecord] = field(default_factory=list)
    leaf_size: int = 1
    leaf_depth: int = 0


@dataclass(frozen=True)
class ScoreReport:
    expected_depth_mean: float
    score: float


def _check_vector(model: ForestModel, x) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1 or len(x) != model.n_features:
        raise DimensionMismatchError(model.n_features, x.size if x.ndim == 1 else x.shape[-1])
    return x


def _check_matrix(model: ForestModel, data) -> np.ndarray:
    X = as_matrix(data)
    if X.size == 0:
        return X.reshape(0, model.n_features)
    if X.shape[1] != model.n_features:
        raise DimensionMismatchError(model.n_features, X.shape[1])
    return X


def trace_path(tree: IsolationTree, x) -> PathTrace:
    """Walk ``x`` from the root to a leaf, one record per traversed edge.

    Occupancies are the tree's training counts, whether or not ``x`` was
    part of the subsample.
    """
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1 or (tree.n_features and len(x) != tree.n_features):
        raise DimensionMismatchError(tree.n_features, x.size)
    records = []
    node = 0
    while tree.feature[node] >= 0:
        f = int(tree.feature[node])
        child = tree.left[node] if x[f] <= tree.threshold[node] else tree.right[node]
        records.append(SplitRecord(f, int(tree.size[node]), int(tree.size[child])))
        node = child
    return PathTrace(records, leaf_size=int(tree.size[node]), leaf_depth=int(tree.depth[node]))


def expected_path_depth(trace: PathTrace) -> float:
    """Depth reached plus the expected further depth of the leaf's occupants."""
    return trace.leaf_depth + expected_depth(trace.leaf_size)


def leaf_nodes(tree: IsolationTree, X: np.ndarray) -> np.ndarray:
    """Index of the leaf reached by every row of ``X``."""
    node = np.zeros(len(X), dtype=np.intp)
    idx = np.arange(len(X))
    while len(idx):
        f = tree.feature[node[idx]]
        internal = f >= 0
        idx = idx[internal]
        f = f[internal]
        at = node[idx]
        go_right = X[idx, f] > tree.threshold[at]
        node[idx] = np.where(go_right, tree.right[at], tree.left[at])
    return node


def _depth_sums(model: ForestModel, X: np.ndarray) -> np.ndarray:
    table = model.depth_table
    total = np.zeros(len(X))
    for tree in model.trees:
        leaf = leaf_nodes(tree, X)
        # accumulate tree by tree so each row's sum has a fixed order
        total += tree.depth[leaf] + table[tree.size[leaf]]
    return total


def _row_chunks(n_rows: int, workers: int) -> list[slice]:
    bounds = np.linspace(0, n_rows, workers + 1).astype(int)
    return [slice(a, b) for a, b in zip(bounds[:-1], bounds[1:]) if b > a]


def score_samples(model: ForestModel, data, n_jobs: int | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Vectorised scoring.

    Returns
    -------
    scores, expected_depth_mean
        Two 1-d arrays aligned with the rows of ``data``.
    """
    X = _check_matrix(model, data)
    workers = min(resolve_workers(n_jobs), max(1, len(X)))
    if workers == 1:
        sums = _depth_sums(model, X)
    else:
        chunks = _row_chunks(len(X), workers)
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(lambda s: _depth_sums(model, X[s]), chunks))
        sums = np.concatenate(parts) if parts else np.zeros(0)
    mean_depth = sums / len(model.trees)
    scores = -np.exp2(-mean_depth / model.expected_depth_norm)
    return scores, mean_depth


def score(model: ForestModel, x) -> ScoreReport:
    x = _check_vector(model, x)
    scores, depth = score_samples(model, x.reshape(1, -1), n_jobs=1)
    return ScoreReport(float(depth[0]), float(scores[0]))


def score_batch(model: ForestModel, data, n_jobs: int | None = None) -> list[ScoreReport]:
    scores, depth = score_samples(model, data, n_jobs=n_jobs)
    return [ScoreReport(float(d), float(s)) for d, s in zip(depth, scores)]


def score_from_depth(mean_depth: float, norm: float) -> float:
    return float(-np.exp2(-mean_depth / norm))
