"""Random walk state, per-checkpoint observables and sample sets."""

import math
from typing import Any, Literal, Self

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from app.domain.geometry import (
    ArrayModel,
    CartanVector,
    JordanVector,
    ProjHyperplane,
    ProjPoint,
)
from app.domain.measure import MeasureFlags

Side = Literal["left", "right"]

U64 = 2**64


class RngStream(BaseModel):
    """Address of one counter-based random stream.

    A stream is identified by the master seed, a purpose word (trials,
    pilot run, hyperplane search, ...) and the trial index. Streams with
    different addresses never overlap.
    """

    model_config = ConfigDict(frozen=True)

    master_seed: int = Field(ge=0, lt=U64)
    purpose: int = Field(default=0, ge=0, lt=U64)
    trial: int = Field(default=0, ge=0, lt=U64)

    def for_trial(self, trial: int) -> "RngStream":
        return self.model_copy(update={"trial": trial})


class WalkState(ArrayModel):
    """Renormalized running product with an exact log-scale ledger.

    The true product equals ``exp(log_scale) * rep``. When the full spectrum
    is tracked, ``wedges[i]`` carries the renormalized product of the
    (i+2)-th exterior powers with its own ledger ``wedge_log_scales[i]``, and
    ``log_det`` accumulates ln|det| of the increments.
    """

    rep: np.ndarray
    log_scale: float = 0.0
    n: int = Field(default=0, ge=0)
    side: Side = "left"
    full_spectrum: bool = True
    wedges: tuple[np.ndarray, ...] = ()
    wedge_log_scales: tuple[float, ...] = ()
    log_det: float = 0.0

    @property
    def dim(self) -> int:
        return self.rep.shape[0]

    def product(self) -> np.ndarray:
        """The un-renormalized product; overflows for long walks."""
        return math.exp(self.log_scale) * self.rep


def _tol(value: float) -> float:
    return 1e-9 * max(1.0, abs(value))


class WalkSample(BaseModel):
    """Observables of Lₙ (or Rₙ) at one checkpoint."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    n: int = Field(ge=0)
    log_norm: float
    log_specrad: float
    cartan: CartanVector
    jordan: JordanVector
    delta_n: float = Field(ge=0.0, le=1.0)
    v_plus: ProjPoint
    h_minus: ProjHyperplane
    degenerate: bool
    log_gap: float = Field(le=0.0)

    @model_validator(mode="after")
    def _check(self) -> Self:
        if self.log_specrad > self.log_norm + _tol(self.log_norm):
            raise ValueError(
                f"log spectral radius {self.log_specrad} exceeds log norm {self.log_norm}"
            )
        if abs(self.cartan.values[0] - self.log_norm) > _tol(self.log_norm):
            raise ValueError("cartan[0] must equal log_norm")
        if abs(self.jordan.values[0] - self.log_specrad) > _tol(self.log_specrad):
            raise ValueError("jordan[0] must equal log_specrad")
        return self

    @property
    def ratio(self) -> float:
        """ρ(Lₙ)/‖Lₙ‖, clipped to 1."""
        return math.exp(min(self.log_specrad - self.log_norm, 0.0))


SAMPLE_COLUMNS = ("log_norm", "log_specrad", "delta_n", "log_gap", "degenerate")
VECTOR_COLUMNS = ("cartan", "jordan", "v_plus", "h_minus")


class SampleSet(ArrayModel):
    """Columnar per-trial, per-checkpoint observables of a Monte Carlo run.

    Scalar columns have shape (trials, checkpoints); vector columns have
    shape (trials, checkpoints, dim). Rows are ordered by trial index.
    """

    config_echo: dict[str, Any] = Field(default_factory=dict)
    seed_lineage: dict[str, int] = Field(default_factory=dict)
    measure_label: str = "custom"
    flags: MeasureFlags = Field(default_factory=MeasureFlags)
    side: Side = "left"
    dim: int = Field(ge=1)
    n: int = Field(ge=0)
    checkpoints: tuple[int, ...]
    trials: int = Field(ge=0)
    log_norm: np.ndarray
    log_specrad: np.ndarray
    delta_n: np.ndarray
    log_gap: np.ndarray
    degenerate: np.ndarray
    cartan: np.ndarray
    jordan: np.ndarray
    v_plus: np.ndarray
    h_minus: np.ndarray

    @model_validator(mode="after")
    def _check_shapes(self) -> Self:
        expected = (self.trials, len(self.checkpoints))
        for name in SAMPLE_COLUMNS:
            if getattr(self, name).shape != expected:
                raise ValueError(f"column {name} has shape {getattr(self, name).shape}")
        for name in VECTOR_COLUMNS:
            if getattr(self, name).shape != (*expected, self.dim):
                raise ValueError(f"column {name} has shape {getattr(self, name).shape}")
        return self

    def checkpoint_index(self, n: int | None = None) -> int:
        """Column index of checkpoint ``n``; the final checkpoint when None."""
        if n is None:
            return len(self.checkpoints) - 1
        try:
            return self.checkpoints.index(n)
        except ValueError as e:
            raise KeyError(f"{n} is not a checkpoint of this sample set") from e

    def at(self, column: str, n: int | None = None) -> np.ndarray:
        """One column restricted to a checkpoint, across all trials."""
        return getattr(self, column)[:, self.checkpoint_index(n)]

    def sample(self, trial: int, checkpoint_index: int) -> WalkSample:
        t, c = trial, checkpoint_index
        return WalkSample(
            n=self.checkpoints[c],
            log_norm=float(self.log_norm[t, c]),
            log_specrad=float(self.log_specrad[t, c]),
            cartan=CartanVector(values=tuple(self.cartan[t, c].tolist())),
            jordan=JordanVector(values=tuple(self.jordan[t, c].tolist())),
            delta_n=float(self.delta_n[t, c]),
            v_plus=ProjPoint(vec=self.v_plus[t, c], degenerate=bool(self.degenerate[t, c])),
            h_minus=ProjHyperplane(
                normal=self.h_minus[t, c], degenerate=bool(self.degenerate[t, c])
            ),
            degenerate=bool(self.degenerate[t, c]),
            log_gap=float(self.log_gap[t, c]),
        )

    def trial_samples(self, trial: int) -> list[WalkSample]:
        return [self.sample(trial, c) for c in range(len(self.checkpoints))]
