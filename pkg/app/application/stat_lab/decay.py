"""Exponential decay estimates for the projective action of random products.

Five families of events are tracked as functions of n:

1. ‖Lₙv‖/‖Lₙ‖ ≤ e^{−εn} for a fixed unit vector v (left walk),
2. δ(Lₙx, Lₙy) ≥ e^{−cn} for a pair of distinct points (left walk),
3. δ(Rₙx, v⁺_{Rₙ}) ≥ e^{−cn} (right walk),
4. δ(Rₙx, R_N x) ≥ e^{−cn} with N ≫ n, a coupling proxy (right walk),
5. item 4 for the transposed measure.

Points come from a fixed deterministic grid unless given explicitly. Every
family reports a "sup" curve (worst point or pair at each n) followed by
one curve per point or pair.
"""

import math
from collections.abc import Sequence
from itertools import combinations

import numpy as np
from loguru import logger

from app.application.matrix_measures import transpose_measure
from app.application.projective_geometry import batched_delta, batched_kak
from app.application.stat_lab.lyapunov import lyapunov_estimate, rate_from_gap
from app.application.stat_lab.tails import wilson_half_width
from app.application.walk_engine import BlockState, run_monte_carlo, walk_blocks
from app.core.config import settings
from app.domain.errors import DomainError, FlagViolation
from app.domain.measure import MatrixMeasure
from app.domain.reports import DecayCurve
from app.infrastructure.rng import StreamPurpose


def direction_grid(dim: int) -> np.ndarray:
    """Unit vectors e_i, (e_i ± e_j)/√2 for i < j, and (1, …, 1)/√d when d > 2."""
    eye = np.eye(dim)
    rows = [eye[i] for i in range(dim)]
    for i, j in combinations(range(dim), 2):
        rows.append((eye[i] + eye[j]) / math.sqrt(2.0))
        rows.append((eye[i] - eye[j]) / math.sqrt(2.0))
    if dim > 2:
        rows.append(np.ones(dim) / math.sqrt(dim))
    return np.stack(rows)


def pilot_rate(
    mu: MatrixMeasure,
    n: int,
    master_seed: int,
    factor: float = 0.5,
    trials: int | None = None,
    threads: int | None = None,
) -> float:
    """factor·(λ̂₁ − λ̂₂) from an independent pilot run on the PILOT stream."""
    trials = trials or max(settings.LYAPUNOV_MIN_TRIALS, 200)
    pilot = run_monte_carlo(
        mu,
        n,
        (n,),
        trials,
        master_seed,
        threads,
        full_spectrum=False,
        purpose=StreamPurpose.PILOT,
    )
    rate = rate_from_gap(lyapunov_estimate(pilot), factor)
    logger.info(f"Pilot rate for {mu.label}: c={rate:.6g} (factor {factor})")
    return rate


def fitted_rate(n_grid: Sequence[int], probs: Sequence[float]) -> float | None:
    """−slope of ln p against n over the points with p > 0."""
    pairs = [(n, p) for n, p in zip(n_grid, probs, strict=True) if p > 0.0]
    if len(pairs) < 2:
        return None
    ns, ps = zip(*pairs, strict=True)
    slope, _ = np.polyfit(np.asarray(ns, dtype=float), np.log(ps), 1)
    return float(-slope)


def _log_delta(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    with np.errstate(divide="ignore"):
        return np.log(batched_delta(x, y))


def _images(block: BlockState, points: np.ndarray) -> np.ndarray:
    # (B, m, d): rep·x for every point; the scalar ledger does not change directions
    return np.einsum("bij,mj->bmi", block.rep, points)


def _item1_reducer(points: np.ndarray, eps: float):
    def reducer(block: BlockState) -> np.ndarray:
        _, a, _ = batched_kak(block.rep)
        with np.errstate(divide="ignore"):
            log_ratio = np.log(np.linalg.norm(_images(block, points), axis=2)) - np.log(a[:, :1])
        return log_ratio <= -eps * block.n

    return reducer


def _item2_reducer(points: np.ndarray, pairs: np.ndarray, rate: float):
    def reducer(block: BlockState) -> np.ndarray:
        img = _images(block, points)
        return _log_delta(img[:, pairs[:, 0]], img[:, pairs[:, 1]]) >= -rate * block.n

    return reducer


def _item3_reducer(points: np.ndarray, rate: float):
    def reducer(block: BlockState) -> np.ndarray:
        k, _, _ = batched_kak(block.rep)
        img = _images(block, points)
        v_plus = np.broadcast_to(k[:, None, :, 0], img.shape)
        return _log_delta(img, v_plus) >= -rate * block.n

    return reducer


def _curves(
    item: int,
    hits: np.ndarray,
    labels: list[str],
    n_grid: tuple[int, ...],
    trials: int,
    rate: float,
) -> list[DecayCurve]:
    # hits: (len(n_grid), m) counts over trials
    probs = hits / trials
    sup = probs.max(axis=1)
    columns = [("sup", sup), *((label, probs[:, j]) for j, label in enumerate(labels))]
    return [
        DecayCurve(
            item=item,
            label=label,
            n_grid=n_grid,
            probs=tuple(p.tolist()),
            half_widths=tuple(wilson_half_width(p, trials).tolist()),
            trials=trials,
            rate_used=rate,
            fitted_rate=fitted_rate(n_grid, p.tolist()),
        )
        for label, p in columns
    ]


def decay_suite(
    mu: MatrixMeasure,
    item: int,
    n_grid: tuple[int, ...],
    trials: int,
    master_seed: int,
    *,
    rate: float | None = None,
    eps: float = 0.05,
    coupling_n: int | None = None,
    points: np.ndarray | None = None,
    threads: int | None = None,
) -> list[DecayCurve]:
    """Empirical probabilities of one decay family over a grid of n.

    Args:
        mu: driving measure, flagged strongly irreducible and proximal
        item: which family (1..5)
        n_grid: ascending walk lengths
        trials: walks per length (one walk observed at every length)
        master_seed: key of the trial streams
        rate: c in e^{−cn}; 0.5·(λ̂₁ − λ̂₂) from a pilot run when None
        eps: ε of item 1 (reported as its rate)
        coupling_n: N of items 4 and 5 (4·max(n_grid) when None)
        points: rows overriding the deterministic direction grid

    Returns:
        The "sup" curve then one curve per point (items 1, 3, 4, 5) or pair
        (item 2)

    Raises:
        FlagViolation: If the measure is not flagged strongly irreducible
            and proximal
        DomainError: On a bad item, grid or dimension
    """
    if not (mu.flags.strongly_irreducible and mu.flags.proximal):
        raise FlagViolation(f"{mu.label} is not flagged strongly irreducible and proximal")
    if item not in range(1, 6):
        raise DomainError(f"decay item must be in 1..5, got {item}")
    if mu.dim < 2:
        raise DomainError("decay estimates need dim >= 2")
    grid = tuple(int(n) for n in n_grid)
    if not grid or list(grid) != sorted(set(grid)) or grid[0] < 1:
        raise DomainError(f"n grid must be ascending positive integers, got {n_grid}")
    if item == 5:
        curves = decay_suite(
            transpose_measure(mu),
            4,
            grid,
            trials,
            master_seed,
            rate=rate,
            coupling_n=coupling_n,
            points=points,
            threads=threads,
        )
        return [c.model_copy(update={"item": 5}) for c in curves]

    pts = direction_grid(mu.dim) if points is None else np.atleast_2d(np.asarray(points, float))
    pts = pts / np.linalg.norm(pts, axis=1, keepdims=True)
    if pts.shape[1] != mu.dim:
        raise DomainError(f"points of dim {pts.shape[1]} for a measure of dim {mu.dim}")
    if item == 1:
        rate = eps
    elif rate is None:
        rate = pilot_rate(mu, grid[-1], master_seed, threads=threads)

    labels = [f"x{i}" for i in range(pts.shape[0])]
    checkpoints = grid
    side = "left"
    match item:
        case 1:
            reducer = _item1_reducer(pts, eps)
        case 2:
            pairs = np.array(list(combinations(range(pts.shape[0]), 2)))
            if pairs.size == 0:
                raise DomainError("item 2 needs at least two points")
            labels = [f"x{i}-x{j}" for i, j in pairs]
            reducer = _item2_reducer(pts, pairs, rate)
        case 3:
            side = "right"
            reducer = _item3_reducer(pts, rate)
        case 4:
            side = "right"
            big_n = coupling_n if coupling_n is not None else 4 * grid[-1]
            if big_n <= grid[-1]:
                raise DomainError(f"coupling length {big_n} must exceed {grid[-1]}")
            checkpoints = (*grid, big_n)

            def reducer(block: BlockState) -> np.ndarray:
                return _images(block, pts)

    logger.info(f"Decay item {item} for {mu.label}: n={grid}, trials={trials}, c={rate:.6g}")
    hits = np.zeros((len(grid), len(labels)), dtype=np.int64)
    for result in walk_blocks(
        mu,
        checkpoints,
        trials,
        master_seed,
        side=side,
        threads=threads,
        full_spectrum=False,
        reducer=reducer,
    ):
        if item == 4:
            limit = result.outputs[-1]
            outs = [
                _log_delta(img, limit) >= -rate * n
                for img, n in zip(result.outputs[:-1], grid, strict=True)
            ]
        else:
            outs = result.outputs
        hits += np.stack([o.sum(axis=0) for o in outs])
    return _curves(item, hits, labels, grid, trials, rate)
