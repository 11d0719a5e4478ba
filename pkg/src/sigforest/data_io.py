"""Reading and writing datasets, spectra and fitted models."""

from __future__ import annotations

import csv
import gzip
import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .dataset import Dataset
from .errors import (
    CorruptModelError,
    DataError,
    DuplicateHeaderError,
    EmptyFileError,
    NonPositiveIntegralError,
    ParseError,
    VersionMismatchError,
)
from .forest import ForestConfig, ForestModel, IsolationTree

FORMAT_VERSION = 1


def _read_rows(path) -> list[list[str]]:
    with open(path, newline="", encoding="utf-8") as fh:
        rows = [row for row in csv.reader(fh)]
    if not rows or not any(cell.strip() for cell in rows[0]):
        raise EmptyFileError(f"{path}: no header row")
    return rows


def _parse_table(
    rows: list[list[str]], id_column: int | None, path, unique: bool = True
) -> tuple[list[str], list[str], np.ndarray]:
    header = [h.strip() for h in rows[0]]
    if unique and len(set(header)) != len(header):
        seen = set()
        dup = next(h for h in header if h in seen or seen.add(h))
        raise DuplicateHeaderError(f"{path}: duplicate column {dup!r}")
    width = len(header)
    feature_cols = [j for j in range(width) if j != id_column]
    body = [r for r in rows[1:] if any(cell.strip() for cell in r)]
    values = np.empty((len(body), len(feature_cols)))
    row_ids = []
    for i, row in enumerate(body):
        line = i + 2
        if len(row) != width:
            raise ParseError(line, min(len(row), width) + 1, "<missing>" if len(row) < width else row[width])
        row_ids.append(row[id_column].strip() if id_column is not None else str(i))
        for out_j, j in enumerate(feature_cols):
            token = row[j].strip()
            try:
                v = float(token)
            except ValueError:
                raise ParseError(line, j + 1, token) from None
            if not math.isfinite(v):
                raise ParseError(line, j + 1, token)
            values[i, out_j] = v
    names = [header[j] for j in feature_cols]
    return names, row_ids, values


def load_csv(path, id_column: int | None = 0) -> Dataset:
    """Load a header-first numeric CSV.

    ``id_column`` is the position of the row-id column; ``None`` means the
    file has none and rows are numbered from 0. Locations in ParseError are
    1-based (line, column) as in a spreadsheet, the header being line 1.
    """
    rows = _read_rows(path)
    names, row_ids, values = _parse_table(rows, id_column, path)
    return Dataset(values, names, row_ids)


def save_csv(dataset: Dataset, path, id_header: str = "row_id") -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow([id_header, *dataset.feature_names])
        for rid, row in zip(dataset.row_ids, dataset.values):
            writer.writerow([rid, *(repr(float(v)) for v in row)])


@dataclass
class SpectraPair:
    flux: np.ndarray
    uncertainty: np.ndarray
    wavelengths: np.ndarray
    row_ids: list[str] | None = None
    wavelength_labels: list[str] | None = None

    def __post_init__(self):
        self.flux = np.asarray(self.flux, dtype=np.float64)
        self.uncertainty = np.asarray(self.uncertainty, dtype=np.float64)
        self.wavelengths = np.asarray(self.wavelengths, dtype=np.float64)
        if self.flux.shape != self.uncertainty.shape:
            raise DataError(f"flux shape {self.flux.shape} != uncertainty shape {self.uncertainty.shape}")
        if self.flux.ndim != 2 or self.flux.shape[1] != len(self.wavelengths):
            raise DataError("flux columns must match the wavelength grid")
        if len(self.wavelengths) < 2:
            raise DataError("need at least two wavelength bins")
        if np.any(self.uncertainty < 0):
            raise DataError("uncertainties must be non-negative")
        steps = np.diff(self.wavelengths)
        if np.any(steps <= 0):
            raise DataError("wavelengths must be strictly increasing")
        if np.max(np.abs(steps - steps.mean())) > 1e-6 * steps.mean():
            raise DataError("wavelength bins must have constant width")
        if self.row_ids is None:
            self.row_ids = [str(i) for i in range(len(self.flux))]
        if self.wavelength_labels is None:
            self.wavelength_labels = [f"{w:g}" for w in self.wavelengths]

    @property
    def bin_width(self) -> float:
        return float((self.wavelengths[-1] - self.wavelengths[0]) / (len(self.wavelengths) - 1))


def featurize_spectra(pair: SpectraPair) -> Dataset:
    """Normalise each spectrum to unit flux integral and append its uncertainties.

    The integral is the rectangle sum ``sum(flux) * bin_width``. Uncertainties
    get the same per-row factor, so signal-to-noise is unchanged. The result
    has ``2 * B`` columns named ``flux_<wavelength>`` then ``err_<wavelength>``.
    """
    width = pair.bin_width
    integral = pair.flux.sum(axis=1) * width
    for rid, value in zip(pair.row_ids, integral):
        if not value > 0:
            raise NonPositiveIntegralError(rid, float(value))
    scale = 1.0 / integral
    values = np.hstack([pair.flux * scale[:, None], pair.uncertainty * scale[:, None]])
    names = [f"flux_{w}" for w in pair.wavelength_labels] + [f"err_{w}" for w in pair.wavelength_labels]
    return Dataset(values, names, list(pair.row_ids))


def _wavelengths(names: list[str], path) -> np.ndarray:
    try:
        return np.array([float(n) for n in names])
    except ValueError:
        raise DataError(f"{path}: header must list wavelengths") from None


def load_spectra(flux_path, uncertainty_path=None, split_at: int | None = None, id_column: int | None = 0) -> SpectraPair:
    """Read spectra from two CSVs, or from one CSV whose columns split at ``split_at``.

    ``split_at`` counts feature columns (the id column excluded): columns
    before it are flux, the rest uncertainties.
    """
    # a combined file may repeat the wavelength header for its second half
    names, row_ids, values = _parse_table(_read_rows(flux_path), id_column, flux_path, unique=uncertainty_path is not None)
    if uncertainty_path is not None:
        err_names, err_ids, err_values = _parse_table(_read_rows(uncertainty_path), id_column, uncertainty_path)
        if err_ids != row_ids:
            raise DataError("flux and uncertainty files list different row ids")
        if not np.array_equal(_wavelengths(err_names, uncertainty_path), _wavelengths(names, flux_path)):
            raise DataError("flux and uncertainty files use different wavelength grids")
        flux, err = values, err_values
    elif split_at is not None:
        if not 0 < split_at < len(names):
            raise DataError(f"split_at={split_at} outside 1..{len(names) - 1}")
        flux, err = values[:, :split_at], values[:, split_at:]
        names = names[:split_at]
    else:
        raise DataError("need an uncertainty file or a split column")
    return SpectraPair(flux, err, _wavelengths(names, flux_path), row_ids, names)


def model_to_dict(model: ForestModel) -> dict:
    cfg = model.config
    return {
        "format_version": FORMAT_VERSION,
        "config": {
            "subsample_size": cfg.subsample_size,
            "tree_count": cfg.tree_count,
            "seed": cfg.seed,
            "max_depth": cfg.max_depth,
        },
        "feature_names": list(model.feature_names),
        "trees": [
            {
                "subsample_indices": t.subsample_indices.tolist(),
                "feature": t.feature.tolist(),
                "threshold": t.threshold.tolist(),
                "left": t.left.tolist(),
                "right": t.right.tolist(),
                "size": t.size.tolist(),
                "depth": t.depth.tolist(),
            }
            for t in model.trees
        ],
    }


def _tree_from_dict(doc: dict, n_features: int) -> IsolationTree:
    tree = IsolationTree(
        feature=np.asarray(doc["feature"], dtype=np.int32),
        threshold=np.asarray(doc["threshold"], dtype=np.float64),
        left=np.asarray(doc["left"], dtype=np.int32),
        right=np.asarray(doc["right"], dtype=np.int32),
        size=np.asarray(doc["size"], dtype=np.int32),
        depth=np.asarray(doc["depth"], dtype=np.int32),
        subsample_indices=np.asarray(doc["subsample_indices"], dtype=np.int64),
        n_features=n_features,
    )
    n = tree.n_nodes
    arrays = (tree.threshold, tree.left, tree.right, tree.size, tree.depth)
    if n == 0 or any(a.shape != (n,) for a in arrays):
        raise CorruptModelError("node arrays have inconsistent lengths")
    internal = np.flatnonzero(tree.feature >= 0)
    if np.any(tree.feature >= n_features):
        raise CorruptModelError("feature index out of range")
    kids = np.concatenate([tree.left[internal], tree.right[internal]])
    if np.any(kids <= 0) or np.any(kids >= n):
        raise CorruptModelError("child index out of range")
    if np.any(tree.size[internal] != tree.size[tree.left[internal]] + tree.size[tree.right[internal]]):
        raise CorruptModelError("node occupancies do not add up")
    if tree.size[0] != len(tree.subsample_indices):
        raise CorruptModelError("root occupancy differs from the subsample size")
    return tree


def model_from_dict(doc: dict) -> ForestModel:
    if not isinstance(doc, dict) or "format_version" not in doc:
        raise CorruptModelError("missing format_version")
    if doc["format_version"] != FORMAT_VERSION:
        raise VersionMismatchError(f"model format {doc['format_version']!r}, expected {FORMAT_VERSION}")
    try:
        cfg = doc["config"]
        config = ForestConfig(
            subsample_size=int(cfg["subsample_size"]),
            tree_count=int(cfg["tree_count"]),
            seed=int(cfg["seed"]),
        )
        names = [str(n) for n in doc["feature_names"]]
        trees = [_tree_from_dict(t, len(names)) for t in doc["trees"]]
    except CorruptModelError:
        raise
    except (KeyError, TypeError, ValueError) as exc:
        raise CorruptModelError(f"malformed model document: {exc}") from exc
    if len(trees) != config.tree_count:
        raise CorruptModelError(f"{len(trees)} trees stored, config says {config.tree_count}")
    return ForestModel(config=config, trees=trees, feature_names=names)


def save_model(model: ForestModel, path) -> None:
    """Write the model as JSON (gzip-compressed when ``path`` ends in .gz)."""
    text = json.dumps(model_to_dict(model), separators=(",", ":"))
    if str(path).endswith(".gz"):
        with open(path, "wb") as raw, gzip.GzipFile(filename="", mode="wb", fileobj=raw, mtime=0) as fh:
            # fixed mtime keeps the compressed bytes reproducible
            fh.write(text.encode("utf-8"))
    else:
        Path(path).write_text(text, encoding="utf-8")


def load_model(path) -> ForestModel:
    try:
        if str(path).endswith(".gz"):
            with gzip.open(path, "rt", encoding="utf-8") as fh:
                doc = json.load(fh)
        else:
            doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except (json.JSONDecodeError, UnicodeDecodeError, EOFError, gzip.BadGzipFile, OSError) as exc:
        if isinstance(exc, FileNotFoundError):
            raise
        raise CorruptModelError(f"{path}: {exc}") from exc
    return model_from_dict(doc)


def write_json(obj, path) -> None:
    Path(path).write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n", encoding="utf-8")
