"""The non strongly irreducible example where ln ρ(Lₙ)/√n has no limit law.

With σ the quarter turn, a = diag(λ, λ⁻¹) and increments σ·a^{εᵢ} where
εᵢ ~ Bernoulli(θ), the left products satisfy

    L_{2k}   = (−1)^k · a^{S_k},   S_k = Σ_{i≤k} (ε_{2i−1} − ε_{2i}),
    L_{2k+1} = ±σ · a^{m}          for some integer m,

so ρ(L_{2k+1}) = 1 exactly while ln ρ(L_{2k}) = |S_k|·ln λ spreads like
|N(0, 2θ(1−θ))|·√k. The report checks both facts path by path and measures
the KS distance of the even-step law to its folded Gaussian limit.
"""

import math

import numpy as np
from loguru import logger

from app.application.matrix_measures import FiniteSampler, notconv_measure
from app.application.projective_geometry import batched_eigen_moduli, batched_kak
from app.application.stat_lab.ks import ks_threshold, two_sample_ks
from app.application.walk_engine import BlockState, walk_blocks
from app.core.config import settings
from app.domain.errors import DomainError
from app.domain.reports import CounterexampleReport
from app.infrastructure.rng import StreamPurpose, generator_for, stream

ODD_TOL = 1e-9


def _counterexample_reducer(block: BlockState) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    k, a, _ = batched_kak(block.rep)
    log_specrad = block.log_scale + np.log(batched_eigen_moduli(block.rep)[:, 0])
    log_norm = block.log_scale + np.log(a[:, 0])
    # attracting point along e₁ ⇔ positive exponent of a
    sign = np.where(np.abs(k[:, 0, 0]) > np.abs(k[:, 1, 0]), 1, -1)
    return log_specrad, log_norm, sign


def bernoulli_walk(master_seed: int, trial: int, sampler: FiniteSampler, n: int) -> np.ndarray:
    """S_1, …, S_{⌊n/2⌋} regenerated from the trial's own stream."""
    keys = sampler.draw_keys(generator_for(stream(master_seed, StreamPurpose.TRIALS, trial)), n)
    eps = (keys == 1).astype(np.int64)
    pairs = n // 2
    y = eps[0 : 2 * pairs : 2] - eps[1 : 2 * pairs : 2]
    return np.cumsum(y)


def folded_gaussian_reference(
    theta: float, draws: int, master_seed: int, k: int | None = None
) -> np.ndarray:
    """|N(0, 2θ(1−θ))| draws; rounded to the lattice ℤ/√k when k is given."""
    gen = generator_for(stream(master_seed, StreamPurpose.REFERENCE))
    z = gen.standard_normal(draws) * math.sqrt(2.0 * theta * (1.0 - theta))
    if k is None:
        return np.abs(z)
    root = math.sqrt(k)
    return np.abs(np.round(z * root)) / root


def counterexample_report(
    lambda_: float,
    theta: float,
    n: int,
    trials: int,
    master_seed: int,
    *,
    reference_draws: int | None = None,
    ks_gate: float | None = None,
    threads: int | None = None,
) -> CounterexampleReport:
    """Exact and statistical checks of the example at every step up to n.

    Args:
        lambda_: λ > 1
        theta: θ ∈ (0, 1)
        n: walk length (at least 2, so one even step exists)
        trials: independent paths (at least 2)
        master_seed: key of trial and reference streams
        reference_draws: size of the folded Gaussian reference sample
        ks_gate: soft KS threshold; KS_SLACK·1.36/√trials when None

    Returns:
        The report; ``odd_exact`` and ``s_match`` are exact checks, the KS
        numbers are distances to be compared with ``ks_threshold``

    Raises:
        DomainError: If a parameter is out of range
    """
    if n < 2:
        raise DomainError(f"n must be at least 2, got {n}")
    if trials < 2:
        raise DomainError(f"trials must be at least 2, got {trials}")
    mu = notconv_measure(lambda_, theta)
    sampler = FiniteSampler(mu)
    log_lambda = math.log(lambda_)
    k_final = n // 2
    odd_steps = list(range(1, n + 1, 2))
    even_steps = list(range(2, n + 1, 2))

    odd_max = 0.0
    mismatches = 0
    final_abs = []
    log_norm_final = []
    y_sum = 0.0
    y_sq = 0.0
    logger.info(f"Counterexample run: lambda={lambda_}, theta={theta}, n={n}, trials={trials}")
    for result in walk_blocks(
        mu,
        tuple(range(1, n + 1)),
        trials,
        master_seed,
        threads=threads,
        full_spectrum=False,
        reducer=_counterexample_reducer,
    ):
        log_specrad = np.stack([o[0] for o in result.outputs], axis=1)
        signs = np.stack([o[2] for o in result.outputs], axis=1)
        log_norm_final.append(result.outputs[-1][1])
        odd = log_specrad[:, [s - 1 for s in odd_steps]]
        odd_max = max(odd_max, float(np.max(np.abs(odd))))
        even_idx = [s - 1 for s in even_steps]
        levels = np.rint(log_specrad[:, even_idx] / log_lambda).astype(np.int64)
        s_hat = signs[:, even_idx] * levels
        for row in range(result.size):
            s_walk = bernoulli_walk(master_seed, result.start + row, sampler, n)
            mismatches += int(np.count_nonzero(s_hat[row] != s_walk))
            y = np.diff(s_walk, prepend=0)
            y_sum += float(y.sum())
            y_sq += float((y * y).sum())
        final_abs.append(np.abs(s_hat[:, -1]) / math.sqrt(k_final))

    normalized = np.concatenate(final_abs)
    draws = reference_draws or settings.COUNTEREXAMPLE_REFERENCE_DRAWS
    y_count = trials * k_final
    y_mean = y_sum / y_count
    growth = np.concatenate(log_norm_final) / n
    report = CounterexampleReport(
        lambda_=lambda_,
        theta=theta,
        n=n,
        trials=trials,
        odd_checkpoints=len(odd_steps),
        odd_max_abs_log_specrad=odd_max,
        odd_exact=odd_max < ODD_TOL,
        s_mismatches=mismatches,
        s_match=mismatches == 0,
        k_final=k_final,
        ks_raw=two_sample_ks(normalized, folded_gaussian_reference(theta, draws, master_seed)),
        ks_lattice=two_sample_ks(
            normalized, folded_gaussian_reference(theta, draws, master_seed, k=k_final)
        ),
        ks_threshold=ks_gate or float(ks_threshold(trials, settings.KS_SLACK)),
        reference_draws=draws,
        y_variance=max(y_sq / y_count - y_mean * y_mean, 0.0),
        y_variance_expected=2.0 * theta * (1.0 - theta),
        lyapunov_top=float(growth.mean()),
        lyapunov_top_std_error=float(growth.std(ddof=1) / math.sqrt(trials)),
    )
    logger.info(
        f"Counterexample: odd_exact={report.odd_exact}, s_match={report.s_match}, "
        f"ks_lattice={report.ks_lattice:.4g}"
    )
    return report
