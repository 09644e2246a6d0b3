"""Regularity of the stationary measure near projective hyperplanes.

The supremum over all hyperplanes H of ν̂{x : δ(x, H) ≤ t} is not
computable, so it is approximated by a maximum over a finite candidate set:
uniformly random unit normals plus normals adapted to the point cloud.
"""

from collections.abc import Sequence

import numpy as np
from loguru import logger

from app.core.config import settings
from app.domain.errors import DomainError, InsufficientSamples
from app.domain.geometry import ProjPoint
from app.domain.reports import ComparisonRow, RegularityProfile, TailCurve
from app.infrastructure.rng import StreamPurpose, generator_for, stream

CANDIDATE_CHUNK = 256
PROJECTION_FLOOR = 1e-12


def _as_unit_rows(points: np.ndarray | Sequence[ProjPoint]) -> np.ndarray:
    if isinstance(points, np.ndarray):
        arr = np.atleast_2d(np.asarray(points, dtype=float))
    else:
        arr = np.stack([p.vec for p in points]) if len(points) else np.zeros((0, 1))
    return arr / np.linalg.norm(arr, axis=1, keepdims=True)


def uniform_normals(dim: int, count: int, master_seed: int) -> np.ndarray:
    """``count`` random unit normals; the first k are the same for every count ≥ k."""
    gen = generator_for(stream(master_seed, StreamPurpose.HYPERPLANES))
    normals = gen.standard_normal((count, dim))
    return normals / np.linalg.norm(normals, axis=1, keepdims=True)


def adaptive_normals(points: np.ndarray, count: int) -> np.ndarray:
    """Normals fitted to the point cloud.

    The eigenvectors of the second-moment matrix give the hyperplanes
    spanned by principal directions. For each of the first ``count``
    points, the least principal direction projected onto x^⊥ gives a
    hyperplane through x that hugs the cloud.
    """
    d = points.shape[1]
    second_moment = points.T @ points / points.shape[0]
    _, eigvecs = np.linalg.eigh(second_moment)
    candidates = [eigvecs.T]
    if d > 1 and count > 0:
        x = points[:count]
        least = eigvecs[:, 0]
        proj = least[None, :] - (x @ least)[:, None] * x
        norms = np.linalg.norm(proj, axis=1)
        keep = norms > PROJECTION_FLOOR
        candidates.append(proj[keep] / norms[keep, None])
    return np.concatenate(candidates, axis=0)


def _slab_maxima(points: np.ndarray, normals: np.ndarray, t_grid: np.ndarray) -> np.ndarray:
    best = np.zeros(t_grid.size, dtype=np.int64)
    for begin in range(0, normals.shape[0], CANDIDATE_CHUNK):
        chunk = normals[begin : begin + CANDIDATE_CHUNK]
        dist = np.abs(points @ chunk.T)
        dist.sort(axis=0)
        # counts[j, h] = #{x : δ(x, H_h) ≤ t_j}
        counts = np.stack(
            [np.searchsorted(dist[:, h], t_grid, side="right") for h in range(chunk.shape[0])],
            axis=1,
        )
        best = np.maximum(best, counts.max(axis=1))
    return best


def regularity_profile(
    points: np.ndarray | Sequence[ProjPoint],
    t_grid: tuple[float, ...],
    hyperplane_count: int,
    master_seed: int,
    adaptive_points: int = 256,
) -> RegularityProfile:
    """Empirical sup_H ν̂{x : δ(x, H) ≤ t} for each t.

    Args:
        points: draws approximating ν, as unit rows or ProjPoints
        t_grid: ascending thresholds
        hyperplane_count: number of uniformly random normals
        master_seed: key of the hyperplane stream
        adaptive_points: points used to build hyperplanes through the data

    Returns:
        The profile; it is a maximum over candidates, so it is monotone in t
        and never decreases when more random normals are added

    Raises:
        InsufficientSamples: If fewer than REGULARITY_MIN_POINTS points
        DomainError: If the t grid is not ascending
    """
    x = _as_unit_rows(points)
    if x.shape[0] < settings.REGULARITY_MIN_POINTS:
        raise InsufficientSamples(
            f"{x.shape[0]} points, need at least {settings.REGULARITY_MIN_POINTS}"
        )
    grid = np.asarray(t_grid, dtype=float)
    if np.any(np.diff(grid) < 0):
        raise DomainError(f"t grid must be ascending, got {t_grid}")
    uniform = uniform_normals(x.shape[1], hyperplane_count, master_seed)
    adaptive = adaptive_normals(x, adaptive_points)
    best = _slab_maxima(x, np.concatenate([uniform, adaptive], axis=0), grid)
    logger.info(
        f"Regularity profile over {x.shape[0]} points, "
        f"{hyperplane_count} random + {adaptive.shape[0]} adaptive hyperplanes"
    )
    return RegularityProfile(
        t_grid=tuple(grid.tolist()),
        sup_probs=tuple((best / x.shape[0]).tolist()),
        points=x.shape[0],
        hyperplanes_sampled=hyperplane_count,
        adaptive_candidates=adaptive.shape[0],
    )


def ratio_regularity_comparison(
    ratio_curve: TailCurve,
    profile: RegularityProfile,
    p: int = 1,
    c: float = 1.0,
) -> list[ComparisonRow]:
    """Ratio tail at each ε next to the profile at 2·c·ε^p.

    The constant in the bound linking the two is not explicit, so the rows
    are reported side by side and never gated.
    """
    if p < 1:
        raise DomainError(f"proximality index must be at least 1, got {p}")
    rows = []
    for eps, prob in zip(ratio_curve.epsilons, ratio_curve.probs, strict=True):
        t = 2.0 * c * eps**p
        rows.append(
            ComparisonRow(epsilon=eps, ratio_prob=prob, profile_t=t, profile_value=profile.at(t))
        )
    return rows
