from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import (
    DataError,
    DuplicateHeaderError,
    DuplicateRowIdError,
    NonFiniteValueError,
    UnknownRowIdError,
)


@dataclass
class Dataset:
    """An N x D matrix of finite binary64 values with named columns and rows."""

    values: np.ndarray
    feature_names: list[str] = field(default_factory=list)
    row_ids: list[str] = field(default_factory=list)

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float64)
        if values.ndim == 1 and values.size == 0:
            values = values.reshape(0, len(self.feature_names))
        if values.ndim != 2:
            raise DataError(f"expected a 2-d matrix, got shape {values.shape}")
        self.values = values
        n, d = values.shape
        if not self.feature_names:
            self.feature_names = [f"f{j}" for j in range(d)]
        if not self.row_ids:
            self.row_ids = [str(i) for i in range(n)]
        self.feature_names = [str(s) for s in self.feature_names]
        self.row_ids = [str(s) for s in self.row_ids]
        if len(self.feature_names) != d:
            raise DataError(f"{len(self.feature_names)} feature names for {d} columns")
        if len(self.row_ids) != n:
            raise DataError(f"{len(self.row_ids)} row ids for {n} rows")
        if len(set(self.feature_names)) != d:
            raise DuplicateHeaderError("feature names are not unique")
        if len(set(self.row_ids)) != n:
            raise DuplicateRowIdError("row ids are not unique")
        bad = np.argwhere(~np.isfinite(values))
        if len(bad):
            raise NonFiniteValueError(int(bad[0, 0]), int(bad[0, 1]))

    @property
    def n_samples(self) -> int:
        return self.values.shape[0]

    @property
    def n_features(self) -> int:
        return self.values.shape[1]

    def __len__(self) -> int:
        return self.n_samples

    def select(self, positions: Sequence[int]) -> Dataset:
        positions = np.asarray(positions, dtype=np.intp)
        return Dataset(
            self.values[positions],
            list(self.feature_names),
            [self.row_ids[p] for p in positions],
        )

    def positions_of(self, row_ids: Sequence[str]) -> list[int]:
        """Map row ids to row positions; raises UnknownRowIdError for ids not present."""
        lookup = {rid: i for i, rid in enumerate(self.row_ids)}
        missing = [r for r in row_ids if r not in lookup]
        if missing:
            raise UnknownRowIdError(missing)
        return [lookup[r] for r in row_ids]


def as_matrix(data) -> np.ndarray:
    if isinstance(data, Dataset):
        return data.values
    values = np.asarray(data, dtype=np.float64)
    if values.ndim == 1:
        values = values.reshape(1, -1)
    return values
