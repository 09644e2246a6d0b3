"""Scalar and vector central limit theorems."""

import math
from typing import Literal

import numpy as np
from loguru import logger
from scipy import stats

from app.application.stat_lab.ks import ks_point_mass, ks_statistic, two_sample_ks
from app.core.config import settings
from app.domain.errors import DegenerateVariance, InsufficientSamples
from app.domain.reports import CltReport, CovarianceReport
from app.domain.walk import SampleSet

SIGMA_FLOOR = 1e-6

Observable = Literal["log_specrad", "log_norm"]


def clt_report(
    samples: SampleSet,
    observable: Observable = "log_specrad",
    lambda_hat: float | None = None,
    n: int | None = None,
) -> CltReport:
    """Normalized fluctuations (x − n·λ̂)/√n of ln ρ(Lₙ) or ln ‖Lₙ‖.

    Args:
        samples: Monte Carlo output
        observable: channel tested against the Gaussian
        lambda_hat: centering from an independent pilot run; when None the
            in-sample mean of ln ‖Lₙ‖/n is used
        n: checkpoint to use (the last by default)

    Returns:
        The report; both channels are centered with the same λ̂

    Raises:
        InsufficientSamples: If fewer than CLT_MIN_TRIALS trials
        DegenerateVariance: If σ̂ < 1e-6 while the measure is flagged
            strongly irreducible
    """
    if samples.trials < settings.CLT_MIN_TRIALS:
        raise InsufficientSamples(
            f"{samples.trials} trials, need at least {settings.CLT_MIN_TRIALS}"
        )
    if not samples.flags.strongly_irreducible:
        logger.warning(f"{samples.measure_label} is not flagged strongly irreducible")
    c = samples.checkpoint_index(n)
    steps = samples.checkpoints[c]
    log_norm = samples.log_norm[:, c]
    log_specrad = samples.log_specrad[:, c]
    centering = "in_sample" if lambda_hat is None else "pilot"
    if lambda_hat is None:
        lambda_hat = float(log_norm.mean() / steps)
    root = math.sqrt(steps)
    normalized = {
        "log_norm": (log_norm - steps * lambda_hat) / root,
        "log_specrad": (log_specrad - steps * lambda_hat) / root,
    }
    sigmas = {name: float(values.std(ddof=1)) for name, values in normalized.items()}
    chosen = normalized[observable]
    sigma_hat = sigmas[observable]

    if sigma_hat < SIGMA_FLOOR:
        if samples.flags.strongly_irreducible:
            raise DegenerateVariance(
                f"sigma_hat={sigma_hat:.3e} although {samples.measure_label} "
                "is flagged strongly irreducible"
            )
        # the limit law is a point mass; compare with one at the sample median
        ks_gauss = ks_point_mass(chosen, atom=float(np.median(chosen)))
    else:
        ks_gauss = ks_statistic(chosen, stats.norm(loc=0.0, scale=sigma_hat).cdf)

    return CltReport(
        observable=observable,
        n=steps,
        trials=samples.trials,
        centering=centering,
        lambda_hat=lambda_hat,
        sigma_hat=sigma_hat,
        sigma_hat_norm=sigmas["log_norm"],
        sigma_hat_specrad=sigmas["log_specrad"],
        normalized_samples=tuple(chosen.tolist()),
        ks_vs_gaussian=ks_gauss,
        ks_norm_vs_specrad=two_sample_ks(normalized["log_norm"], normalized["log_specrad"]),
    )


def eigen_clt_covariance(
    samples: SampleSet,
    lambdas: tuple[float, ...] | None = None,
    n: int | None = None,
) -> CovarianceReport:
    """Covariance of (ℓ(Lₙ) − n·λ̂)/√n across trials.

    For det-1 measures the coordinates of ℓ sum to ln|det Lₙ| = 0, so the
    covariance is degenerate along (1, …, 1); ``null_direction_variance``
    is the variance of (Σᵢ ℓᵢ)/√n.

    Raises:
        InsufficientSamples: If fewer than LYAPUNOV_MIN_TRIALS trials
    """
    if samples.trials < max(settings.LYAPUNOV_MIN_TRIALS, 2):
        raise InsufficientSamples(
            f"{samples.trials} trials, need at least {settings.LYAPUNOV_MIN_TRIALS}"
        )
    if not samples.flags.zariski_dense:
        logger.warning(f"{samples.measure_label} is not flagged Zariski dense")
    c = samples.checkpoint_index(n)
    steps = samples.checkpoints[c]
    jordan = samples.jordan[:, c]
    center = jordan.mean(axis=0) / steps if lambdas is None else np.asarray(lambdas)
    z = (jordan - steps * center) / math.sqrt(steps)
    k_hat = np.atleast_2d(np.cov(z, rowvar=False, ddof=1))
    k_hat = (k_hat + k_hat.T) / 2.0
    eigenvalues = np.sort(np.linalg.eigvalsh(k_hat))[::-1]
    null_var = float(np.var(jordan.sum(axis=1) / math.sqrt(steps), ddof=1))
    return CovarianceReport(
        n=steps,
        trials=samples.trials,
        mean_vector=tuple(z.mean(axis=0).tolist()),
        k_hat=tuple(tuple(row) for row in k_hat.tolist()),
        k_eigenvalues=tuple(eigenvalues.tolist()),
        null_direction_variance=null_var,
    )
