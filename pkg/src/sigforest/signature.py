"""Per-feature anomaly signatures.

Each edge a sample traverses changes its expected depth by

    delta = 1 - E[d(parent occupancy)] + E[d(child occupancy)]

and these increments telescope: starting from E[d(n)] at the root, their sum
along a path is exactly the path's expected depth. A feature's signature for
a sample is the mean increment over every split on that feature the sample
meets, pooled across all trees. Strongly negative values mark the features
that isolate the sample; values near +1 mark features whose splits did not
separate it from anything.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .dataset import Dataset
from .depth import expected_depth
from .forest import ForestModel, IsolationTree, resolve_workers
from .scoring import SplitRecord, _check_matrix, _check_vector, _row_chunks, trace_path


@dataclass
class SignatureVector:
    values: np.ndarray
    counts: np.ndarray

    @property
    def defined_mask(self) -> np.ndarray:
        return self.counts > 0


@dataclass
class SignatureMatrix:
    values: np.ndarray
    counts: np.ndarray
    row_ids: list[str] = field(default_factory=list)

    @property
    def defined_mask(self) -> np.ndarray:
        return self.counts > 0

    def __len__(self) -> int:
        return len(self.values)

    def row(self, i: int) -> SignatureVector:
        return SignatureVector(self.values[i], self.counts[i])


def delta_signature(record: SplitRecord) -> float:
    return 1.0 - expected_depth(record.parent_size) + expected_depth(record.child_size)


def edge_deltas(tree: IsolationTree, table: np.ndarray) -> np.ndarray:
    """Signature increment for entering each node from its parent (0 at the root)."""
    delta = np.zeros(tree.n_nodes)
    child = np.flatnonzero(tree.parent >= 0)
    delta[child] = 1.0 - table[tree.size[tree.parent[child]]] + table[tree.size[child]]
    return delta


def _accumulate(model: ForestModel, X: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    sums = np.zeros((len(X), model.n_features))
    counts = np.zeros((len(X), model.n_features), dtype=np.int64)
    table = model.depth_table
    for tree in model.trees:
        delta = edge_deltas(tree, table)
        node = np.zeros(len(X), dtype=np.intp)
        idx = np.arange(len(X))
        while len(idx):
            f = tree.feature[node[idx]]
            internal = f >= 0
            idx = idx[internal]
            f = f[internal]
            at = node[idx]
            child = np.where(X[idx, f] > tree.threshold[at], tree.right[at], tree.left[at])
            node[idx] = child
            # one entry per row, so fancy-index accumulation has no collisions
            sums[idx, f] += delta[child]
            counts[idx, f] += 1
    return sums, counts


def signature_batch(model: ForestModel, data, n_jobs: int | None = None) -> SignatureMatrix:
    X = _check_matrix(model, data)
    workers = min(resolve_workers(n_jobs), max(1, len(X)))
    if workers == 1:
        sums, counts = _accumulate(model, X)
    else:
        chunks = _row_chunks(len(X), workers)
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(lambda s: _accumulate(model, X[s]), chunks))
        sums = np.concatenate([p[0] for p in parts])
        counts = np.concatenate([p[1] for p in parts])
    values = np.divide(sums, counts, out=np.zeros_like(sums), where=counts > 0)
    if isinstance(data, Dataset):
        row_ids = list(data.row_ids)
    else:
        row_ids = [str(i) for i in range(len(X))]
    return SignatureMatrix(values, counts, row_ids)


def signature(model: ForestModel, x) -> SignatureVector:
    x = _check_vector(model, x)
    matrix = signature_batch(model, x.reshape(1, -1), n_jobs=1)
    return matrix.row(0)


def reconstruct_depth(model: ForestModel, x) -> np.ndarray:
    """Per-tree expected depth rebuilt as E[d(n)] plus the path's increments."""
    x = _check_vector(model, x)
    base = model.expected_depth_norm
    out = np.empty(len(model.trees))
    for t, tree in enumerate(model.trees):
        total = base
        for record in trace_path(tree, x).records:
            total += delta_signature(record)
        out[t] = total
    return out


def telescoping_residual(model: ForestModel, data) -> float:
    """Largest per-tree gap between the rebuilt and the directly computed depth.

    Vectorised over rows; used by the CLI's ``--check`` mode.
    """
    X = _check_matrix(model, data)
    table = model.depth_table
    base = model.expected_depth_norm
    worst = 0.0
    for tree in model.trees:
        delta = edge_deltas(tree, table)
        node = np.zeros(len(X), dtype=np.intp)
        rebuilt = np.full(len(X), base)
        idx = np.arange(len(X))
        while len(idx):
            f = tree.feature[node[idx]]
            internal = f >= 0
            idx = idx[internal]
            f = f[internal]
            at = node[idx]
            node[idx] = np.where(X[idx, f] > tree.threshold[at], tree.right[at], tree.left[at])
            rebuilt[idx] += delta[node[idx]]
        direct = tree.depth[node] + table[tree.size[node]]
        if len(X):
            worst = max(worst, float(np.max(np.abs(rebuilt - direct))))
    return worst
