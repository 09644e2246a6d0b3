"""Deterministic linear algebra and projective geometry.

The scalar operations take and return domain models. The ``batched_*``
helpers work on stacks of shape (..., d, d) and are what the walk engine
and the brute-force certificate check call in their inner loops.
"""

from itertools import combinations

import numpy as np

from app.domain.errors import DomainError, EigenFailure
from app.domain.geometry import (
    DEGENERATE_GAP_TOL,
    RECONSTRUCTION_TOL,
    SIGN_TOL,
    ContractionData,
    JordanVector,
    KakDecomposition,
    ProjHyperplane,
    ProjPoint,
    ProximalityCertificate,
    SquareMatrix,
)
from app.domain.reports import CertificateReport

# ---------------------------------------------------------------------------
# batched kernels
# ---------------------------------------------------------------------------


def canonical_signs(vecs: np.ndarray) -> np.ndarray:
    """±1 per vector (last axis) making its first non-negligible entry positive."""
    mask = np.abs(vecs) > SIGN_TOL
    first = np.argmax(mask, axis=-1)
    lead = np.take_along_axis(vecs, first[..., None], axis=-1)[..., 0]
    return np.where(lead < 0, -1.0, 1.0)


def canonicalize(vecs: np.ndarray) -> np.ndarray:
    return vecs * canonical_signs(vecs)[..., None]


def batched_kak(arr: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """SVD with the sign convention used everywhere in the package.

    Each left singular column gets a positive first non-negligible entry;
    the matching row of the right factor is flipped so that the product is
    unchanged.

    Returns:
        (k, a, u) with ``arr = k @ diag(a) @ u``
    """
    try:
        k, a, u = np.linalg.svd(arr)
    except np.linalg.LinAlgError as e:
        raise EigenFailure(f"SVD did not converge: {e}") from e
    signs = canonical_signs(np.swapaxes(k, -1, -2))
    return k * signs[..., None, :], a, u * signs[..., :, None]


def batched_eigen_moduli(arr: np.ndarray) -> np.ndarray:
    """Eigenvalue moduli of each matrix, sorted descending along the last axis."""
    try:
        eig = np.linalg.eigvals(arr)
    except np.linalg.LinAlgError as e:
        raise EigenFailure(f"eigenvalue routine did not converge: {e}") from e
    return -np.sort(-np.abs(eig), axis=-1)


def batched_delta(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Sine metric ‖x∧y‖/(‖x‖‖y‖) along the last axis.

    The wedge is formed entrywise, which keeps small angles accurate and
    makes the result exactly symmetric in (x, y).
    """
    w = x[..., :, None] * y[..., None, :] - y[..., :, None] * x[..., None, :]
    wedge_norm = np.sqrt(np.sum(w * w, axis=(-2, -1)) / 2.0)
    denom = np.linalg.norm(x, axis=-1) * np.linalg.norm(y, axis=-1)
    return np.minimum(wedge_norm / denom, 1.0)


def batched_delta_hyperplane(x: np.ndarray, normal: np.ndarray) -> np.ndarray:
    """δ([x], [ker f]) = |f(x)| / (‖x‖‖f‖)."""
    dot = np.abs(np.sum(x * normal, axis=-1))
    denom = np.linalg.norm(x, axis=-1) * np.linalg.norm(normal, axis=-1)
    return np.minimum(dot / denom, 1.0)


def wedge_basis(dim: int, p: int) -> list[tuple[int, ...]]:
    """Index subsets of size p in lexicographic order."""
    return list(combinations(range(dim), p))


def compound(arr: np.ndarray, p: int) -> np.ndarray:
    """p-th compound (matrix of p×p minors) of each matrix in a stack."""
    dim = arr.shape[-1]
    if not 1 <= p <= dim:
        raise DomainError(f"wedge degree {p} outside [1, {dim}]")
    if p == 1:
        return np.array(arr, dtype=float)
    idx = np.array(wedge_basis(dim, p))
    rows = idx[:, None, :, None]
    cols = idx[None, :, None, :]
    return np.linalg.det(arr[..., rows, cols])


def batched_certificate(arr: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Certificate test on a stack.

    Returns:
        (has_certificate, delta_g, gap_ratio), each of the stack's batch shape
    """
    k, a, u = batched_kak(arr)
    delta = np.minimum(np.abs(np.sum(k[..., :, 0] * u[..., 0, :], axis=-1)), 1.0)
    if arr.shape[-1] < 2:
        gap = np.zeros(arr.shape[:-2])
    else:
        gap = a[..., 1] / a[..., 0]
    has = (delta > 2.0 * np.sqrt(gap)) & (gap <= 1.0 - DEGENERATE_GAP_TOL)
    return has, delta, gap


# ---------------------------------------------------------------------------
# scalar operations
# ---------------------------------------------------------------------------


def kak(g: SquareMatrix) -> KakDecomposition:
    """KAK (singular value) decomposition g = k·diag(a)·u.

    Args:
        g: invertible matrix (invertibility is enforced by SquareMatrix)

    Returns:
        The decomposition with a non-increasing and the canonical signs

    Raises:
        EigenFailure: If the SVD does not converge or k·diag(a)·u misses g
            by more than 1e-10 relative to a₁
    """
    k, a, u = batched_kak(g.array)
    dec = KakDecomposition(k=k, a=a, u=u)
    error = float(np.max(np.abs(dec.reconstruct() - g.array))) / float(a[0])
    if error > RECONSTRUCTION_TOL:
        raise EigenFailure(f"KAK reconstruction error {error:.3e} exceeds {RECONSTRUCTION_TOL:.0e}")
    return dec


def attracting_point(g: SquareMatrix) -> ProjPoint:
    """v_g⁺ = k_g[e₁]; flagged degenerate when a₂/a₁ is within 1e-9 of 1."""
    dec = kak(g)
    return ProjPoint(vec=dec.k[:, 0], degenerate=dec.degenerate)


def repelling_hyperplane(g: SquareMatrix) -> ProjHyperplane:
    """H_g⁻ with normal u_gᵀe₁ (the first row of u_g)."""
    dec = kak(g)
    return ProjHyperplane(normal=dec.u[0, :], degenerate=dec.degenerate)


def delta_points(x: ProjPoint, y: ProjPoint) -> float:
    return float(batched_delta(x.vec, y.vec))


def delta_point_hyperplane(x: ProjPoint, h: ProjHyperplane) -> float:
    return float(batched_delta_hyperplane(x.vec, h.normal))


def delta_hyperplanes(h: ProjHyperplane, h2: ProjHyperplane) -> float:
    return float(batched_delta(h.normal, h2.normal))


def projective_action(g: SquareMatrix, x: ProjPoint) -> ProjPoint:
    return ProjPoint(vec=g.array @ x.vec)


def dual_action(g: SquareMatrix, h: ProjHyperplane) -> ProjHyperplane:
    """g·[ker f] = [ker f∘g⁻¹]; the normal maps to g⁻ᵀ·normal."""
    return ProjHyperplane(normal=np.linalg.solve(g.array.T, h.normal))


def wedge_power(g: SquareMatrix, p: int) -> SquareMatrix:
    """∧^p g in the lexicographic basis (e_{i1}∧…∧e_{ip})_{i1<…<ip}.

    Raises:
        DomainError: If p is outside [1, d]
    """
    return SquareMatrix(entries=compound(g.array, p))


def eigen_moduli(g: SquareMatrix) -> JordanVector:
    """Jordan projection: natural logs of the eigenvalue moduli, descending."""
    moduli = batched_eigen_moduli(g.array)
    return JordanVector(values=tuple(np.log(moduli).tolist()))


def spectral_radius(g: SquareMatrix) -> float:
    return float(batched_eigen_moduli(g.array)[0])


def proximality_certificate(g: SquareMatrix) -> ProximalityCertificate | None:
    """Certificate that g is proximal with ρ(g)/‖g‖ ≥ δ_g/2.

    Present exactly when δ(v_g⁺, H_g⁻) > 2·sqrt(a₂/a₁) and the top singular
    value is not tied. Absence does not mean g is non-proximal.
    """
    has, delta, gap = batched_certificate(g.array)
    if not bool(has):
        return None
    delta_g = float(delta)
    return ProximalityCertificate(
        delta_g=delta_g, gap_ratio=float(gap), lower_bound=delta_g / 2.0
    )


def contraction_data(g: SquareMatrix, eps: float) -> ContractionData:
    """Lipschitz and image-radius bounds for g on {x : δ(x, H_g⁻) ≥ ε}.

    Raises:
        DomainError: If eps is not in (0, 1]
    """
    if not 0.0 < eps <= 1.0:
        raise DomainError(f"eps must lie in (0, 1], got {eps}")
    gap = kak(g).gap_ratio
    return ContractionData(lipschitz_bound=gap / eps**2, image_radius=gap / eps)


def certificate_report(g: SquareMatrix) -> CertificateReport:
    """Everything ``certify`` prints for one matrix."""
    dec = kak(g)
    delta_g = float(min(abs(float(dec.k[:, 0] @ dec.u[0, :])), 1.0))
    moduli = batched_eigen_moduli(g.array)
    ratio = min(float(moduli[0] / dec.a[0]), 1.0)
    second = float(moduli[1] / moduli[0]) if g.dim > 1 else 0.0
    cert = proximality_certificate(g)
    return CertificateReport(
        dim=g.dim,
        delta_g=delta_g,
        gap_ratio=dec.gap_ratio,
        has_certificate=cert is not None,
        lower_bound=cert.lower_bound if cert else None,
        ratio=ratio,
        bound_verified=(ratio >= cert.lower_bound - 1e-10) if cert else None,
        second_modulus_ratio=second,
    )

