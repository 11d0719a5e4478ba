"""Synthetic datasets with planted anomalies, for tests and demo scripts."""

from __future__ import annotations

import numpy as np

from .data_io import SpectraPair

NOMINAL, NOISE_TYPE, POINT_TYPE = 0, 1, 2


def planted_outlier(seed: int, n: int = 100, dims: int = 1, offset: float = 10.0) -> np.ndarray:
    """``n`` standard-normal rows followed by one row displaced to ``offset`` in dimension 0 only."""
    rng = np.random.default_rng(seed)
    outlier = np.zeros((1, dims))
    outlier[0, 0] = offset
    return np.vstack([rng.normal(size=(n, dims)), outlier])


def two_type_anomalies(
    seed: int,
    n_nominal: int = 400,
    n_noise: int = 20,
    n_point: int = 20,
    bins: int = 10,
    noise_inflation: float = 4.0,
    flux_shift: float = 0.6,
) -> tuple[np.ndarray, np.ndarray]:
    """Flux-like block followed by an uncertainty-like block, with two anomaly kinds.

    Noise-type rows have their uncertainty block inflated; point-type rows
    have their flux block shifted. Returns ``(X, labels)`` with labels from
    ``NOMINAL``, ``NOISE_TYPE``, ``POINT_TYPE``.
    """
    rng = np.random.default_rng(seed)
    labels = np.repeat([NOMINAL, NOISE_TYPE, POINT_TYPE], [n_nominal, n_noise, n_point])
    flux = rng.normal(1.0, 0.1, size=(len(labels), bins))
    err = np.abs(rng.normal(0.1, 0.01, size=(len(labels), bins)))
    err[labels == NOISE_TYPE] *= noise_inflation
    flux[labels == POINT_TYPE] += flux_shift
    return np.hstack([flux, err]), labels


def spectra(seed: int, n: int = 50, bins: int = 289, start: float = 3305.0, stop: float = 8586.0) -> SpectraPair:
    """Smooth positive continua with a few absorption dips and per-bin errors."""
    rng = np.random.default_rng(seed)
    wl = np.linspace(start, stop, bins)
    x = (wl - wl.mean()) / (stop - start)
    amp = rng.uniform(0.5, 2.0, size=(n, 1))
    slope = rng.normal(0.0, 0.3, size=(n, 1))
    flux = amp * (1.0 + slope * x)
    for centre in (4000.0, 5000.0, 6150.0):
        depth = rng.uniform(0.1, 0.4, size=(n, 1))
        flux = flux * (1.0 - depth * np.exp(-0.5 * ((wl - centre) / 60.0) ** 2))
    err = np.abs(rng.normal(0.02, 0.005, size=(n, bins))) * amp
    flux = flux + rng.normal(size=(n, bins)) * err
    return SpectraPair(flux, err, wl)
