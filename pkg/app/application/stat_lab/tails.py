"""Empirical tail probabilities with Wilson confidence half-widths."""

import numpy as np

from app.core.config import settings
from app.domain.reports import CertificateRate, TailCurve
from app.domain.walk import SampleSet


def wilson_half_width(p: np.ndarray, trials: int, z: float | None = None) -> np.ndarray:
    """Half-width of the Wilson score interval for a proportion."""
    z = settings.WILSON_Z if z is None else z
    p = np.asarray(p, dtype=float)
    z2 = z * z
    return z / (1.0 + z2 / trials) * np.sqrt(p * (1.0 - p) / trials + z2 / (4.0 * trials**2))


def _curve(
    label: str,
    hits: np.ndarray,
    epsilons: tuple[float, ...],
    n: int,
    direction: str = "le",
) -> TailCurve:
    trials = hits.shape[0]
    probs = hits.mean(axis=0)
    return TailCurve(
        label=label,
        direction=direction,
        epsilons=tuple(epsilons),
        probs=tuple(probs.tolist()),
        half_widths=tuple(wilson_half_width(probs, trials).tolist()),
        n=n,
        trials=trials,
    )


def ratio_tail(
    samples: SampleSet, eps_grid: tuple[float, ...], n: int | None = None
) -> TailCurve:
    """P̂(ρ(Lₙ)/‖Lₙ‖ ≤ ε) per ε, compared in log space.

    The ratio is clipped to 1, so every ε ≥ 1 gives probability 1.
    """
    c = samples.checkpoint_index(n)
    log_ratio = np.minimum(samples.log_specrad[:, c] - samples.log_norm[:, c], 0.0)
    hits = log_ratio[:, None] <= np.log(np.asarray(eps_grid))[None, :]
    return _curve("ratio", hits, eps_grid, samples.checkpoints[c])


def delta_tail(
    samples: SampleSet, eps_grid: tuple[float, ...], n: int | None = None
) -> TailCurve:
    """P̂(δ(v⁺_{Lₙ}, H⁻_{Lₙ}) ≤ ε) per ε."""
    c = samples.checkpoint_index(n)
    hits = samples.delta_n[:, c][:, None] <= np.asarray(eps_grid)[None, :]
    return _curve("delta", hits, eps_grid, samples.checkpoints[c])


def certificate_rate(samples: SampleSet) -> CertificateRate:
    """Fraction of trials with δₙ² > 4·a₂/a₁ at each checkpoint."""
    with np.errstate(divide="ignore"):
        log_delta = np.log(samples.delta_n)
    holds = (2.0 * log_delta > np.log(4.0) + samples.log_gap) & ~samples.degenerate
    return CertificateRate(
        checkpoints=samples.checkpoints,
        fractions=tuple(holds.mean(axis=0).tolist()),
        trials=samples.trials,
    )


def cartan_jordan_gap_tail(
    samples: SampleSet, m_grid: tuple[float, ...], n: int | None = None
) -> TailCurve:
    """P̂(‖κ(Lₙ) − ℓ(Lₙ)‖ > M) per M; tight when μ is strongly irreducible."""
    c = samples.checkpoint_index(n)
    gap = np.linalg.norm(samples.cartan[:, c] - samples.jordan[:, c], axis=1)
    hits = gap[:, None] > np.asarray(m_grid)[None, :]
    return _curve("cartan_minus_jordan", hits, m_grid, samples.checkpoints[c], direction="gt")
