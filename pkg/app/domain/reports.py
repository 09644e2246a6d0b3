"""Statistical reports produced from sample sets.

Every report is a frozen pydantic model that dumps to JSON directly; the
ones with a natural tabular form also expose ``csv_table()``.
"""

import bisect
import math
from typing import Literal, Self

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

CsvTable = tuple[list[str], list[list[object]]]

PSD_SLACK = 1e-10
SYMMETRY_TOL = 1e-12


class _Report(BaseModel):
    model_config = ConfigDict(frozen=True)


class LyapunovEstimate(_Report):
    """Per-step Lyapunov exponents λ̂₁ ≥ … ≥ λ̂_d with standard errors."""

    lambdas: tuple[float, ...]
    std_errors: tuple[float, ...]
    n_used: int = Field(ge=1)
    trials_used: int = Field(ge=1)
    specrad_rate: float
    specrad_rate_std_error: float = Field(ge=0.0)

    @model_validator(mode="after")
    def _check(self) -> Self:
        if len(self.lambdas) != len(self.std_errors):
            raise ValueError("lambdas and std_errors differ in length")
        for i in range(len(self.lambdas) - 1):
            slack = 2.0 * (self.std_errors[i] + self.std_errors[i + 1]) + 1e-12
            if self.lambdas[i + 1] > self.lambdas[i] + slack:
                raise ValueError(f"lambdas are not non-increasing: {self.lambdas}")
        return self

    @property
    def top_gap(self) -> float:
        """λ̂₁ − λ̂₂ (0 in dimension one)."""
        if len(self.lambdas) < 2:
            return 0.0
        return self.lambdas[0] - self.lambdas[1]

    @property
    def top_gap_std_error(self) -> float:
        if len(self.lambdas) < 2:
            return 0.0
        return math.hypot(self.std_errors[0], self.std_errors[1])

    def csv_table(self) -> CsvTable:
        header = ["index", "lambda", "std_error"]
        rows = [
            [i + 1, lam, se]
            for i, (lam, se) in enumerate(zip(self.lambdas, self.std_errors, strict=True))
        ]
        return header, rows


class CltReport(_Report):
    """Normalized fluctuations of ln ρ(Lₙ) or ln ‖Lₙ‖ around n·λ̂₁."""

    observable: Literal["log_specrad", "log_norm"]
    n: int = Field(ge=1)
    trials: int = Field(ge=1)
    centering: Literal["pilot", "in_sample"]
    lambda_hat: float
    sigma_hat: float = Field(ge=0.0)
    sigma_hat_norm: float = Field(ge=0.0)
    sigma_hat_specrad: float = Field(ge=0.0)
    normalized_samples: tuple[float, ...]
    ks_vs_gaussian: float = Field(ge=0.0, le=1.0)
    ks_norm_vs_specrad: float = Field(ge=0.0, le=1.0)

    @property
    def sigma_relative_gap(self) -> float:
        """|σ̂_norm − σ̂_specrad| / σ̂_norm."""
        if self.sigma_hat_norm == 0.0:
            return 0.0 if self.sigma_hat_specrad == 0.0 else math.inf
        return abs(self.sigma_hat_norm - self.sigma_hat_specrad) / self.sigma_hat_norm

    def csv_table(self) -> CsvTable:
        return ["trial", "normalized"], [[t, v] for t, v in enumerate(self.normalized_samples)]


def _check_probabilities(probs: tuple[float, ...]) -> None:
    if any(not 0.0 <= p <= 1.0 for p in probs):
        raise ValueError("probabilities must lie in [0, 1]")


class TailCurve(_Report):
    """Empirical tail probabilities over a threshold grid.

    ``direction="le"`` reports P̂(X ≤ ε) (non-decreasing in ε),
    ``direction="gt"`` reports P̂(X > ε) (non-increasing in ε).
    """

    label: str
    direction: Literal["le", "gt"] = "le"
    epsilons: tuple[float, ...]
    probs: tuple[float, ...]
    half_widths: tuple[float, ...]
    n: int = Field(ge=0)
    trials: int = Field(ge=1)

    @model_validator(mode="after")
    def _check(self) -> Self:
        if not len(self.epsilons) == len(self.probs) == len(self.half_widths):
            raise ValueError("grid, probabilities and half-widths differ in length")
        if list(self.epsilons) != sorted(self.epsilons):
            raise ValueError("threshold grid must be ascending")
        _check_probabilities(self.probs)
        steps = np.diff(self.probs)
        if self.direction == "le" and np.any(steps < 0):
            raise ValueError("a cumulative tail must be non-decreasing")
        if self.direction == "gt" and np.any(steps > 0):
            raise ValueError("an upper tail must be non-increasing")
        return self

    def prob_at(self, epsilon: float) -> float:
        return self.probs[self.epsilons.index(epsilon)]

    def csv_table(self) -> CsvTable:
        header = ["label", "n", "epsilon", "prob", "half_width"]
        rows = [
            [self.label, self.n, e, p, h]
            for e, p, h in zip(self.epsilons, self.probs, self.half_widths, strict=True)
        ]
        return header, rows


class DecayCurve(_Report):
    """Probabilities of one decay estimate as a function of n."""

    item: int = Field(ge=1, le=5)
    label: str
    n_grid: tuple[int, ...]
    probs: tuple[float, ...]
    half_widths: tuple[float, ...]
    trials: int = Field(ge=1)
    rate_used: float
    fitted_rate: float | None = None

    @model_validator(mode="after")
    def _check(self) -> Self:
        if not len(self.n_grid) == len(self.probs) == len(self.half_widths):
            raise ValueError("grid, probabilities and half-widths differ in length")
        _check_probabilities(self.probs)
        return self

    def csv_table(self) -> CsvTable:
        header = ["item", "label", "n", "prob", "half_width", "rate_used", "fitted_rate"]
        rows = [
            [self.item, self.label, n, p, h, self.rate_used, self.fitted_rate]
            for n, p, h in zip(self.n_grid, self.probs, self.half_widths, strict=True)
        ]
        return header, rows


class RegularityProfile(_Report):
    """Empirical sup over hyperplanes H of ν̂{x : δ(x, H) ≤ t}."""

    t_grid: tuple[float, ...]
    sup_probs: tuple[float, ...]
    points: int = Field(ge=1)
    hyperplanes_sampled: int = Field(ge=0)
    adaptive_candidates: int = Field(ge=0)
    search_method: str = "uniform normals + principal-direction candidates"

    @model_validator(mode="after")
    def _check(self) -> Self:
        if len(self.t_grid) != len(self.sup_probs):
            raise ValueError("t grid and probabilities differ in length")
        if list(self.t_grid) != sorted(self.t_grid):
            raise ValueError("t grid must be ascending")
        _check_probabilities(self.sup_probs)
        if np.any(np.diff(self.sup_probs) < 0):
            raise ValueError("a regularity profile must be non-decreasing in t")
        return self

    def at(self, t: float) -> float:
        """Profile at the smallest grid point ≥ t (an upper estimate), 1 past the grid."""
        idx = bisect.bisect_left(self.t_grid, t)
        if idx == len(self.t_grid):
            return 1.0
        return self.sup_probs[idx]

    def csv_table(self) -> CsvTable:
        return ["t", "sup_prob"], [[t, p] for t, p in zip(self.t_grid, self.sup_probs, strict=True)]


class CovarianceReport(_Report):
    """Covariance K̂ of (ℓ(Lₙ) − n·λ̂)/√n across trials."""

    n: int = Field(ge=1)
    trials: int = Field(ge=2)
    mean_vector: tuple[float, ...]
    k_hat: tuple[tuple[float, ...], ...]
    k_eigenvalues: tuple[float, ...]
    null_direction_variance: float = Field(ge=0.0)

    @model_validator(mode="after")
    def _check(self) -> Self:
        k = np.array(self.k_hat)
        if np.max(np.abs(k - k.T), initial=0.0) > SYMMETRY_TOL:
            raise ValueError("K_hat must be symmetric")
        if min(self.k_eigenvalues, default=0.0) < -PSD_SLACK:
            raise ValueError("K_hat must be positive semi-definite")
        return self

    def csv_table(self) -> CsvTable:
        d = len(self.mean_vector)
        header = ["row", *[f"k_{j + 1}" for j in range(d)]]
        return header, [[i + 1, *row] for i, row in enumerate(self.k_hat)]


class CertificateRate(_Report):
    """Fraction of trials with δₙ² > 4·a₂/a₁ at each checkpoint."""

    checkpoints: tuple[int, ...]
    fractions: tuple[float, ...]
    trials: int = Field(ge=1)

    def csv_table(self) -> CsvTable:
        rows = [[n, f] for n, f in zip(self.checkpoints, self.fractions, strict=True)]
        return ["n", "certificate_fraction"], rows


class IndependenceReport(_Report):
    """Asymptotic independence of attracting points and repelling hyperplanes."""

    n: int = Field(ge=2)
    half: int = Field(ge=1)
    trials: int = Field(ge=2)
    rate_used: float
    drift_prob: float = Field(ge=0.0, le=1.0)
    drift_half_width: float = Field(ge=0.0)
    ks_split_vs_full: float = Field(ge=0.0, le=1.0)


class ComparisonRow(_Report):
    """Ratio tail at ε against the regularity profile at 2·c·ε^p."""

    epsilon: float
    ratio_prob: float
    profile_t: float
    profile_value: float


class CounterexampleReport(_Report):
    """Exact and statistical checks on the non strongly irreducible example."""

    lambda_: float = Field(alias="lambda", gt=1.0)
    theta: float = Field(gt=0.0, lt=1.0)
    n: int = Field(ge=1)
    trials: int = Field(ge=1)
    odd_checkpoints: int = Field(ge=0)
    odd_max_abs_log_specrad: float = Field(ge=0.0)
    odd_exact: bool
    s_mismatches: int = Field(ge=0)
    s_match: bool
    k_final: int = Field(ge=0)
    ks_raw: float = Field(ge=0.0, le=1.0)
    ks_lattice: float = Field(ge=0.0, le=1.0)
    ks_threshold: float = Field(gt=0.0)
    reference_draws: int = Field(ge=1)
    y_variance: float = Field(ge=0.0)
    y_variance_expected: float = Field(ge=0.0)
    lyapunov_top: float
    lyapunov_top_std_error: float = Field(ge=0.0)

    model_config = ConfigDict(frozen=True, populate_by_name=True)

    @property
    def exact_checks_pass(self) -> bool:
        return self.odd_exact and self.s_match


class CertificateReport(_Report):
    """Certificate check for a single matrix."""

    dim: int = Field(ge=1)
    delta_g: float = Field(ge=0.0, le=1.0)
    gap_ratio: float = Field(ge=0.0, le=1.0)
    has_certificate: bool
    lower_bound: float | None = None
    ratio: float = Field(ge=0.0)
    bound_verified: bool | None = None
    second_modulus_ratio: float = Field(ge=0.0)


class BatchCertifyReport(_Report):
    """Brute-force check of the certificate contract on random matrices."""

    matrices: int = Field(ge=0)
    certificates: int = Field(ge=0)
    bound_violations: int = Field(ge=0)
    simplicity_violations: int = Field(ge=0)
    min_slack: float | None = None

    @property
    def violations(self) -> int:
        return self.bound_violations + self.simplicity_violations
