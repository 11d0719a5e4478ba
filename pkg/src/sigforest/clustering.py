"""Group the most anomalous samples by signature so they can be triaged per cluster."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .dataset import Dataset
from .errors import InvalidFractionError, TooFewSamplesError
from .forest import ForestModel
from .scoring import ScoreReport, score_samples
from .signature import SignatureMatrix, signature_batch


@dataclass(frozen=True)
class ClusterConfig:
    k: int = 5
    top_fraction: float = 0.10
    restarts: int = 10
    max_iterations: int = 300
    tolerance: float = 1e-6
    seed: int = 0
    standardize: bool = False

    def __post_init__(self):
        if self.k < 1:
            raise ValueError(f"k must be >= 1, got {self.k}")
        if not 0 < self.top_fraction <= 1:
            raise InvalidFractionError(f"top_fraction must be in (0, 1], got {self.top_fraction}")
        if self.restarts < 1 or self.max_iterations < 1:
            raise ValueError("restarts and max_iterations must be >= 1")
        if self.tolerance < 0:
            raise ValueError(f"tolerance must be >= 0, got {self.tolerance}")


@dataclass
class KMeansResult:
    assignments: np.ndarray
    centroids: np.ndarray
    inertia: float
    n_iter: int
    restart: int
    inertia_history: list[float]


@dataclass
class ClusterReport:
    selected_ids: list[str]
    selected_positions: np.ndarray
    selected_scores: np.ndarray
    assignments: np.ndarray
    centroids: np.ndarray
    inertia: float
    profiles: np.ndarray
    sizes: np.ndarray
    signatures: SignatureMatrix

    @property
    def triage_ratio(self) -> float:
        """Selected count divided by the size of the smallest non-empty cluster."""
        occupied = self.sizes[self.sizes > 0]
        return len(self.selected_ids) / int(occupied.min())

    def to_dict(self, feature_names: Sequence[str] | None = None) -> dict:
        out = {
            "selected_count": len(self.selected_ids),
            "selected_ids": list(self.selected_ids),
            "selected_scores": [float(s) for s in self.selected_scores],
            "assignments": [int(a) for a in self.assignments],
            "cluster_sizes": [int(s) for s in self.sizes],
            "inertia": float(self.inertia),
            "triage_ratio": self.triage_ratio,
            "centroids": self.centroids.tolist(),
            "profiles": self.profiles.tolist(),
        }
        if feature_names is not None:
            out["feature_names"] = list(feature_names)
        return out


def _as_scores(scores) -> np.ndarray:
    if len(scores) and isinstance(scores[0], ScoreReport):
        return np.array([s.score for s in scores])
    return np.asarray(scores, dtype=np.float64)


def selection_size(n: int, q: float) -> int:
    # round first so that e.g. 0.1 * 30 counts as 3, not 4
    return max(1, math.ceil(round(q * n, 9)))


def top_anomalies(scores, q: float) -> list[int]:
    """Positions of the ceil(q * N) lowest scores, most anomalous first.

    Ties are broken by position.
    """
    if not 0 < q <= 1:
        raise InvalidFractionError(f"fraction must be in (0, 1], got {q}")
    values = _as_scores(scores)
    if len(values) == 0:
        raise ValueError("no scores to rank")
    order = np.lexsort((np.arange(len(values)), values))
    return [int(i) for i in order[: selection_size(len(values), q)]]


def _sq_distances(rows: np.ndarray, centroids: np.ndarray) -> np.ndarray:
    diff = rows[:, None, :] - centroids[None, :, :]
    return np.einsum("mkd,mkd->mk", diff, diff)


def _assign(rows: np.ndarray, centroids: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    d2 = _sq_distances(rows, centroids)
    labels = np.argmin(d2, axis=1)
    return labels, d2[np.arange(len(rows)), labels]


def kmeans_plus_plus(rows: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    m = len(rows)
    chosen = [int(rng.integers(m))]
    closest = _sq_distances(rows, rows[chosen]).min(axis=1)
    for _ in range(1, k):
        total = closest.sum()
        if total > 0:
            nxt = int(rng.choice(m, p=closest / total))
        else:
            nxt = int(rng.integers(m))
        chosen.append(nxt)
        closest = np.minimum(closest, _sq_distances(rows, rows[[nxt]])[:, 0])
    return rows[chosen].copy()


def lloyd(rows: np.ndarray, centroids: np.ndarray, max_iterations: int, tolerance: float):
    """Lloyd iterations from the given centroids.

    An empty cluster is re-seeded at the point currently farthest from its
    centroid. Stops once no centroid coordinate moves by more than
    ``tolerance``. Returns ``(labels, centroids, inertia, n_iter, history)``
    where ``history`` holds the inertia after every assignment step.
    """
    centroids = centroids.copy()
    k = len(centroids)
    history = []
    n_iter = 0
    for n_iter in range(1, max_iterations + 1):
        labels, d2 = _assign(rows, centroids)
        history.append(float(d2.sum()))
        new = centroids.copy()
        sizes = np.bincount(labels, minlength=k)
        for c in range(k):
            if sizes[c]:
                new[c] = rows[labels == c].mean(axis=0)
        far = d2.copy()
        for c in np.flatnonzero(sizes == 0):
            p = int(np.argmax(far))
            new[c] = rows[p]
            far[p] = -1.0
        shift = float(np.max(np.abs(new - centroids)))
        centroids = new
        if shift <= tolerance:
            break
    labels, d2 = _assign(rows, centroids)
    inertia = float(d2.sum())
    history.append(inertia)
    return labels, centroids, inertia, n_iter, history


def kmeans(rows, config: ClusterConfig | None = None, **overrides) -> KMeansResult:
    """K-means++ seeded Lloyd clustering, best of ``config.restarts`` runs.

    Each restart has its own random stream derived from ``config.seed``; the
    lowest inertia wins, earlier restarts winning ties.
    """
    config = config or ClusterConfig(**overrides)
    rows = np.asarray(rows, dtype=np.float64)
    if rows.ndim != 2:
        raise ValueError(f"expected a 2-d array, got shape {rows.shape}")
    if len(rows) < config.k:
        raise TooFewSamplesError(f"{len(rows)} rows cannot form {config.k} clusters")
    best = None
    for r in range(config.restarts):
        rng = np.random.Generator(np.random.Philox(np.random.SeedSequence(config.seed, spawn_key=(r,))))
        init = kmeans_plus_plus(rows, config.k, rng)
        labels, centroids, inertia, n_iter, history = lloyd(
            rows, init, config.max_iterations, config.tolerance
        )
        if best is None or inertia < best.inertia:
            best = KMeansResult(labels, centroids, inertia, n_iter, r, history)
    return best


def cluster_profiles(rows: np.ndarray, assignments: np.ndarray, k: int) -> tuple[np.ndarray, np.ndarray]:
    """Mean row per cluster and cluster sizes; empty clusters get a zero profile."""
    profiles = np.zeros((k, rows.shape[1]))
    sizes = np.bincount(assignments, minlength=k)
    for c in range(k):
        if sizes[c]:
            profiles[c] = rows[assignments == c].mean(axis=0)
    return profiles, sizes


def _standardize(rows: np.ndarray) -> np.ndarray:
    scale = rows.std(axis=0)
    scale[scale == 0] = 1.0
    return (rows - rows.mean(axis=0)) / scale


def cluster_signatures(
    model: ForestModel,
    data,
    config: ClusterConfig | None = None,
    n_jobs: int | None = None,
) -> ClusterReport:
    """Score everything, keep the top fraction, cluster their signatures.

    Signature entries for features a sample never met count as 0 in the
    distance computation.
    """
    config = config or ClusterConfig()
    if not isinstance(data, Dataset):
        data = Dataset(np.asarray(data, dtype=np.float64))
    scores, _ = score_samples(model, data, n_jobs=n_jobs)
    positions = top_anomalies(scores, config.top_fraction)
    if len(positions) < config.k:
        raise TooFewSamplesError(
            f"top {config.top_fraction:g} selects {len(positions)} rows, fewer than k={config.k}"
        )
    selected = data.select(positions)
    sig = signature_batch(model, selected, n_jobs=n_jobs)
    rows = sig.values
    result = kmeans(_standardize(rows) if config.standardize else rows, config)
    profiles, sizes = cluster_profiles(rows, result.assignments, config.k)
    return ClusterReport(
        selected_ids=list(selected.row_ids),
        selected_positions=np.asarray(positions),
        selected_scores=scores[positions],
        assignments=result.assignments,
        centroids=result.centroids,
        inertia=result.inertia,
        profiles=profiles,
        sizes=sizes,
        signatures=sig,
    )
