"""Isolation trees on random subsamples and the forest that holds them.

Trees are stored as flat node arrays. Node 0 is the root; internal nodes carry
a feature index and a split value, leaves carry ``feature == -1``. Every node
records how many subsample points reached it, which is what the signature
computation consumes.
"""

from __future__ import annotations

import logging
import os
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from functools import cached_property

import numpy as np

from .dataset import Dataset, as_matrix
from .depth import expected_depth, expected_depth_table
from .errors import EmptyDatasetError, NonFiniteValueError

logger = logging.getLogger(__name__)

THREADS_ENV = "SIGFOREST_THREADS"


def resolve_workers(n_jobs: int | None = None) -> int:
    if n_jobs is None:
        n_jobs = int(os.environ.get(THREADS_ENV, "1") or 1)
    return max(1, int(n_jobs))


@dataclass(frozen=True)
class ForestConfig:
    """Forest hyper-parameters.

    ``subsample_size`` must be a power of two of at least 2 (the score is
    normalised by the expected depth of that many points, which is zero for
    one point). The depth cap is its base-2 logarithm.
    """

    subsample_size: int = 1024
    tree_count: int = 3000
    seed: int = 0

    def __post_init__(self):
        n = self.subsample_size
        if n < 2 or n & (n - 1):
            raise ValueError(f"subsample_size must be a power of two >= 2, got {n}")
        if self.tree_count < 1:
            raise ValueError(f"tree_count must be >= 1, got {self.tree_count}")
        if not 0 <= self.seed < 2**64:
            raise ValueError(f"seed must fit in 64 unsigned bits, got {self.seed}")

    @property
    def max_depth(self) -> int:
        return self.subsample_size.bit_length() - 1


@dataclass(eq=False)
class IsolationTree:
    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    size: np.ndarray
    depth: np.ndarray
    subsample_indices: np.ndarray
    n_features: int = 0

    @property
    def n_nodes(self) -> int:
        return len(self.feature)

    @property
    def is_leaf(self) -> np.ndarray:
        return self.feature < 0

    @cached_property
    def parent(self) -> np.ndarray:
        parent = np.full(self.n_nodes, -1, dtype=np.int32)
        internal = np.flatnonzero(~self.is_leaf)
        parent[self.left[internal]] = internal
        parent[self.right[internal]] = internal
        return parent


@dataclass(eq=False)
class ForestModel:
    config: ForestConfig
    trees: list[IsolationTree]
    feature_names: list[str]

    @property
    def n_features(self) -> int:
        return len(self.feature_names)

    @property
    def expected_depth_norm(self) -> float:
        return expected_depth(self.config.subsample_size)

    @cached_property
    def depth_table(self) -> np.ndarray:
        return expected_depth_table(self.config.subsample_size)


def tree_rng(seed: int, tree_index: int) -> np.random.Generator:
    """Independent Philox stream for one tree, keyed by (seed, tree index)."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed, spawn_key=(tree_index,))))


def build_tree(data, subsample, max_depth: int, rng: np.random.Generator) -> IsolationTree:
    """Grow one isolation tree over ``data[subsample]``.

    The tree is grown one depth level at a time. A cell stops splitting when
    it holds a single point or sits at ``max_depth``. Otherwise a feature is
    drawn uniformly and the split value uniformly from ``[min, max)`` of that
    feature over the cell; if the feature is constant over the cell the
    remaining features are tried in random order, and a cell that is
    constant in every feature becomes a leaf.
    """
    X = as_matrix(data)
    rows = np.asarray(subsample, dtype=np.intp)
    if rows.size == 0:
        raise ValueError("cannot build a tree on an empty subsample")
    n_features = X.shape[1]
    cap = 2 * len(rows) - 1
    feature = np.full(cap, -1, dtype=np.int32)
    threshold = np.zeros(cap)
    left = np.full(cap, -1, dtype=np.int32)
    right = np.full(cap, -1, dtype=np.int32)
    size = np.zeros(cap, dtype=np.int32)
    depth = np.zeros(cap, dtype=np.int32)
    size[0] = len(rows)
    n_nodes = 1

    # frontier node j owns rows[starts[j]:starts[j] + counts[j]]
    if len(rows) >= 2 and max_depth > 0:
        nodes = np.array([0])
        counts = np.array([len(rows)])
    else:
        nodes = np.empty(0, dtype=np.intp)
        counts = np.empty(0, dtype=np.intp)

    for level in range(max_depth):
        k = len(nodes)
        if k == 0:
            break
        starts = np.concatenate(([0], np.cumsum(counts)[:-1]))
        owner = np.repeat(np.arange(k), counts)
        f = rng.integers(n_features, size=k)
        vals = X[rows, f[owner]]
        lo = np.minimum.reduceat(vals, starts)
        hi = np.maximum.reduceat(vals, starts)

        for j in np.flatnonzero(lo == hi):
            seg = slice(starts[j], starts[j] + counts[j])
            block = X[rows[seg]]
            order = rng.permutation(n_features)
            order = order[order != f[j]]
            spread = np.ptp(block[:, order], axis=0)
            usable = np.flatnonzero(spread > 0)
            if len(usable) == 0:
                f[j] = -1
                continue
            f[j] = order[usable[0]]
            vals[seg] = block[:, f[j]]
            lo[j] = vals[seg].min()
            hi[j] = vals[seg].max()

        u = rng.random(k)
        thr = lo + u * (hi - lo)
        over = thr >= hi
        thr[over] = np.nextafter(hi[over], -np.inf)

        split = np.flatnonzero(f >= 0)
        m = len(split)
        go_right = vals > thr[owner]
        n_right = np.bincount(owner[go_right], minlength=k)[split]
        n_left = counts[split] - n_right

        parents = nodes[split]
        left_ids = n_nodes + 2 * np.arange(m)
        right_ids = left_ids + 1
        feature[parents] = f[split]
        threshold[parents] = thr[split]
        left[parents] = left_ids
        right[parents] = right_ids
        child_ids = np.empty(2 * m, dtype=np.intp)
        child_ids[0::2] = left_ids
        child_ids[1::2] = right_ids
        child_counts = np.empty(2 * m, dtype=np.intp)
        child_counts[0::2] = n_left
        child_counts[1::2] = n_right
        size[child_ids] = child_counts
        depth[child_ids] = level + 1
        n_nodes += 2 * m

        slot = np.full(k, -1)
        slot[split] = np.arange(m)
        keep = slot[owner] >= 0
        child_slot = (2 * slot[owner] + go_right)[keep]
        rows = rows[keep][np.argsort(child_slot, kind="stable")]

        active = (child_counts >= 2) & (level + 1 < max_depth)
        rows = rows[np.repeat(active, child_counts)]
        nodes = child_ids[active]
        counts = child_counts[active]

    return IsolationTree(
        feature=feature[:n_nodes].copy(),
        threshold=threshold[:n_nodes].copy(),
        left=left[:n_nodes].copy(),
        right=right[:n_nodes].copy(),
        size=size[:n_nodes].copy(),
        depth=depth[:n_nodes].copy(),
        subsample_indices=np.asarray(subsample, dtype=np.int64).copy(),
        n_features=n_features,
    )


def _check_training_data(X: np.ndarray) -> None:
    if X.ndim != 2 or X.shape[0] < 2:
        raise EmptyDatasetError(f"need at least 2 rows to fit, got shape {X.shape}")
    if X.shape[1] < 1:
        raise EmptyDatasetError("need at least one feature column")
    bad = np.argwhere(~np.isfinite(X))
    if len(bad):
        raise NonFiniteValueError(int(bad[0, 0]), int(bad[0, 1]))


def fit(data, config: ForestConfig | None = None, n_jobs: int | None = None) -> ForestModel:
    """Build ``config.tree_count`` isolation trees.

    Each tree draws its subsample (without replacement) and all of its split
    randomness from its own stream, so the result does not depend on
    ``n_jobs``. If the data has fewer rows than ``subsample_size``, the
    subsample size drops to the largest power of two that fits.
    """
    config = config or ForestConfig()
    X = as_matrix(data)
    _check_training_data(X)
    feature_names = list(data.feature_names) if isinstance(data, Dataset) else [f"f{j}" for j in range(X.shape[1])]

    n_rows = X.shape[0]
    if n_rows < config.subsample_size:
        clamped = 1 << (n_rows.bit_length() - 1)
        warnings.warn(
            f"subsample_size {config.subsample_size} exceeds {n_rows} rows; using {clamped}",
            stacklevel=2,
        )
        config = replace(config, subsample_size=clamped)

    n = config.subsample_size
    max_depth = config.max_depth

    def grow(t: int) -> IsolationTree:
        rng = tree_rng(config.seed, t)
        subsample = rng.choice(n_rows, size=n, replace=False)
        return build_tree(X, subsample, max_depth, rng)

    workers = resolve_workers(n_jobs)
    if workers == 1:
        trees = [grow(t) for t in range(config.tree_count)]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            trees = list(pool.map(grow, range(config.tree_count)))
    logger.info("fitted %d trees (n=%d, depth cap %d)", len(trees), n, max_depth)
    return ForestModel(config=config, trees=trees, feature_names=feature_names)
