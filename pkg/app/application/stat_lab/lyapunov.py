"""Lyapunov spectrum estimates."""

import math

from app.core.config import settings
from app.domain.errors import InsufficientSamples
from app.domain.reports import LyapunovEstimate
from app.domain.walk import SampleSet


def lyapunov_estimate(samples: SampleSet, n: int | None = None) -> LyapunovEstimate:
    """λ̂_i = mean over trials of κ_i(Lₙ)/n at a checkpoint (the last by default).

    Args:
        samples: Monte Carlo output with the full Cartan vector
        n: checkpoint to use

    Returns:
        Exponents with trial-variance standard errors, plus the growth rate
        of ln ρ(Lₙ)

    Raises:
        InsufficientSamples: If fewer than LYAPUNOV_MIN_TRIALS trials
    """
    if samples.trials < settings.LYAPUNOV_MIN_TRIALS:
        raise InsufficientSamples(
            f"{samples.trials} trials, need at least {settings.LYAPUNOV_MIN_TRIALS}"
        )
    c = samples.checkpoint_index(n)
    steps = samples.checkpoints[c]
    rates = samples.cartan[:, c] / steps
    specrad = samples.log_specrad[:, c] / steps
    root = math.sqrt(samples.trials)
    return LyapunovEstimate(
        lambdas=tuple(rates.mean(axis=0).tolist()),
        std_errors=tuple((rates.std(axis=0, ddof=1) / root).tolist()),
        n_used=steps,
        trials_used=samples.trials,
        specrad_rate=float(specrad.mean()),
        specrad_rate_std_error=float(specrad.std(ddof=1) / root),
    )


def top_gap(estimate: LyapunovEstimate) -> float:
    """λ̂₁ − λ̂₂, floored at 0."""
    return max(estimate.top_gap, 0.0)


def rate_from_gap(estimate: LyapunovEstimate, factor: float = 0.5) -> float:
    """Default decay rate c = factor·(λ̂₁ − λ̂₂)."""
    return factor * top_gap(estimate)


def sum_is_zero(estimate: LyapunovEstimate) -> bool:
    """Σλ̂_i within 3 combined standard errors of 0."""
    combined = math.sqrt(sum(se * se for se in estimate.std_errors))
    return abs(sum(estimate.lambdas)) <= 3.0 * combined + 1e-12

