"""Asymptotic independence of attracting points and repelling hyperplanes."""

import math

import numpy as np
from loguru import logger

from app.application.projective_geometry import (
    batched_delta,
    batched_delta_hyperplane,
    batched_kak,
)
from app.application.stat_lab.decay import pilot_rate
from app.application.stat_lab.ks import two_sample_ks
from app.application.stat_lab.tails import wilson_half_width
from app.application.walk_engine import BlockState, walk_blocks
from app.domain.errors import DomainError
from app.domain.measure import MatrixMeasure
from app.domain.reports import IndependenceReport

DRIFT_RATE_FACTOR = 0.25


def _directions(block: BlockState) -> tuple[np.ndarray, np.ndarray]:
    k, _, u = batched_kak(block.rep)
    return k[:, :, 0], u[:, 0, :]


def asymptotic_independence_report(
    mu: MatrixMeasure,
    n: int,
    trials: int,
    master_seed: int,
    *,
    rate: float | None = None,
    threads: int | None = None,
) -> IndependenceReport:
    """Right-walk checks at n/2 and n.

    The attracting point of Rₙ settles early, while its repelling
    hyperplane is driven by the latest increments. Two numbers are
    reported: the probability that v⁺ still moves by 2e^{−cn} between
    ⌊n/2⌋ and n, and the KS distance between δ(v⁺_{Rₙ}, H⁻_{Rₙ}) and the
    same distance with v⁺ and H⁻ taken from two independent trials.

    Args:
        rate: c; 0.25·(λ̂₁ − λ̂₂) from a pilot run when None

    Raises:
        DomainError: If n < 2 or trials < 2
    """
    if n < 2:
        raise DomainError(f"n must be at least 2, got {n}")
    if trials < 2:
        raise DomainError(f"independent pairing needs at least 2 trials, got {trials}")
    half = n // 2
    if rate is None:
        rate = pilot_rate(mu, n, master_seed, factor=DRIFT_RATE_FACTOR, threads=threads)
    v_half, h_half, v_full, h_full = [], [], [], []
    for result in walk_blocks(
        mu,
        (half, n),
        trials,
        master_seed,
        side="right",
        threads=threads,
        full_spectrum=False,
        reducer=_directions,
    ):
        (vh, hh), (vf, hf) = result.outputs
        v_half.append(vh)
        h_half.append(hh)
        v_full.append(vf)
        h_full.append(hf)
    v_half_arr = np.concatenate(v_half)
    h_half_arr = np.concatenate(h_half)
    v_full_arr = np.concatenate(v_full)
    h_full_arr = np.concatenate(h_full)

    with np.errstate(divide="ignore"):
        log_drift = np.log(batched_delta(v_full_arr, v_half_arr))
    drift = float(np.mean(log_drift >= math.log(2.0) - rate * n))
    joint = batched_delta_hyperplane(v_full_arr, h_full_arr)
    split = batched_delta_hyperplane(v_half_arr, np.roll(h_half_arr, -1, axis=0))
    report = IndependenceReport(
        n=n,
        half=half,
        trials=trials,
        rate_used=rate,
        drift_prob=drift,
        drift_half_width=float(wilson_half_width(drift, trials)),
        ks_split_vs_full=two_sample_ks(joint, split),
    )
    logger.info(
        f"Independence check for {mu.label}: drift={report.drift_prob:.4g}, "
        f"ks={report.ks_split_vs_full:.4g}"
    )
    return report
