"""Shared fixtures: seeded generators, small measures and hand-built sample sets."""

from collections.abc import Callable
from fractions import Fraction

import numpy as np
import pytest

from app.application.matrix_measures import (
    elementary_measure,
    notconv_measure,
    positive_pair_measure,
)
from app.core.config import settings
from app.domain import Atom, MatrixMeasure, MeasureFlags, SampleSet


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(20240607)


@pytest.fixture
def positive_pair() -> MatrixMeasure:
    return positive_pair_measure()


@pytest.fixture
def notconv() -> MatrixMeasure:
    return notconv_measure(2.0, 0.5)


@pytest.fixture
def elementary3() -> MatrixMeasure:
    return elementary_measure(3)


def point_mass(matrix, flags: MeasureFlags | None = None, label: str = "point") -> MatrixMeasure:
    arr = np.asarray(matrix, dtype=float)
    return MatrixMeasure(
        dim=arr.shape[0],
        kind="finite",
        atoms=(Atom(matrix=arr, weight=Fraction(1)),),
        flags=flags or MeasureFlags(),
        label=label,
    )


@pytest.fixture
def make_point_mass() -> Callable[..., MatrixMeasure]:
    return point_mass


@pytest.fixture
def small_minimums(monkeypatch: pytest.MonkeyPatch) -> None:
    """Lower the minimum sample sizes so estimators run on small sets."""
    monkeypatch.setattr(settings, "CLT_MIN_TRIALS", 20)
    monkeypatch.setattr(settings, "REGULARITY_MIN_POINTS", 10)


def build_samples(
    log_norm: np.ndarray,
    log_specrad: np.ndarray | None = None,
    delta_n: np.ndarray | None = None,
    log_gap: np.ndarray | None = None,
    checkpoints: tuple[int, ...] = (10,),
    dim: int = 2,
) -> SampleSet:
    """A SampleSet from scalar columns of shape (trials, checkpoints)."""
    log_norm = np.atleast_2d(np.asarray(log_norm, dtype=float))
    if log_norm.shape[1] != len(checkpoints):
        log_norm = log_norm.T
    trials, cols = log_norm.shape
    log_specrad = log_norm.copy() if log_specrad is None else np.asarray(log_specrad, float)
    log_specrad = log_specrad.reshape(trials, cols)
    delta_n = np.ones((trials, cols)) if delta_n is None else np.asarray(delta_n, float)
    log_gap = np.full((trials, cols), -1.0) if log_gap is None else np.asarray(log_gap, float)
    cartan = np.zeros((trials, cols, dim))
    cartan[..., 0] = log_norm
    cartan[..., 1] = -log_norm
    jordan = np.zeros((trials, cols, dim))
    jordan[..., 0] = log_specrad
    jordan[..., 1] = -log_specrad
    unit = np.zeros((trials, cols, dim))
    unit[..., 0] = 1.0
    return SampleSet(
        dim=dim,
        n=max(checkpoints),
        checkpoints=checkpoints,
        trials=trials,
        log_norm=log_norm,
        log_specrad=log_specrad,
        delta_n=delta_n.reshape(trials, cols),
        log_gap=log_gap.reshape(trials, cols),
        degenerate=np.zeros((trials, cols), dtype=bool),
        cartan=cartan,
        jordan=jordan,
        v_plus=unit,
        h_minus=unit.copy(),
    )


@pytest.fixture
def make_samples() -> Callable[..., SampleSet]:
    return build_samples
