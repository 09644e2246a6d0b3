"""Kolmogorov–Smirnov distances (distances only, no p-values)."""

from collections.abc import Callable

import numpy as np
from scipy import stats

from app.domain.errors import EmptyInput


def _nonempty(values: np.ndarray | list[float], name: str) -> np.ndarray:
    arr = np.asarray(values, dtype=float).ravel()
    if arr.size == 0:
        raise EmptyInput(f"{name} is empty")
    return arr


def ks_statistic(values: np.ndarray | list[float], cdf: Callable[[np.ndarray], np.ndarray]) -> float:
    """sup |F̂ − F| against a continuous CDF.

    Raises:
        EmptyInput: If ``values`` is empty
    """
    arr = _nonempty(values, "sample")
    return float(stats.kstest(arr, cdf).statistic)


def two_sample_ks(a: np.ndarray | list[float], b: np.ndarray | list[float]) -> float:
    """sup |F̂_a − F̂_b|.

    Raises:
        EmptyInput: If either sample is empty
    """
    return float(stats.ks_2samp(_nonempty(a, "first sample"), _nonempty(b, "second sample")).statistic)


def ks_point_mass(values: np.ndarray | list[float], atom: float = 0.0) -> float:
    """KS distance to the Dirac mass at ``atom``."""
    arr = _nonempty(values, "sample")
    below = float(np.mean(arr < atom))
    at_or_below = float(np.mean(arr <= atom))
    return max(below, 1.0 - at_or_below)


def ks_threshold(count: int, slack: float) -> float:
    """Soft acceptance gate slack·1.36/√N."""
    return slack * 1.36 / np.sqrt(count)
