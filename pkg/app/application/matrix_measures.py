"""Driving measures: moments, pushforwards, named ensembles and samplers."""

import math
from abc import ABC, abstractmethod
from fractions import Fraction

import numpy as np
from loguru import logger

from app.application.projective_geometry import batched_kak, compound
from app.domain.errors import DomainError, UnsupportedForSampler
from app.domain.experiment import AtomsMeasureSpec, EnsembleMeasureSpec, MeasureSpec
from app.domain.geometry import SquareMatrix
from app.domain.measure import Atom, MatrixMeasure, MeasureFlags, MomentReport, SamplerSpec
from app.infrastructure.rng import AliasTable, StreamPurpose, generator_for, stream

SAMPLER_MOMENT_DRAWS = 10_000

SIGMA = ((0.0, -1.0), (1.0, 0.0))
POSITIVE_PAIR = (((2.0, 1.0), (1.0, 1.0)), ((1.0, 1.0), (1.0, 2.0)))


def moment_kernel(g: SquareMatrix) -> float:
    """l(g) = max{ln⁺‖g‖, ln⁺‖g⁻¹‖} with operator norms."""
    _, a, _ = batched_kak(g.array)
    return _kernel(a)


def _kernel(a: np.ndarray) -> np.ndarray | float:
    top = np.log(a[..., 0])
    bottom = -np.log(a[..., -1])
    out = np.maximum(np.maximum(top, bottom), 0.0)
    return float(out) if np.ndim(out) == 0 else out


def moment(
    mu: MatrixMeasure,
    i: int,
    exact: bool | None = None,
    draws: int = SAMPLER_MOMENT_DRAWS,
    master_seed: int = 0,
) -> MomentReport:
    """∫ l(g)^i dμ(g).

    Finite measures give the exact weighted sum. Samplers give a Monte
    Carlo estimate with its standard error, unless ``exact=True``.

    Raises:
        DomainError: If i < 1
        UnsupportedForSampler: If an exact value is requested of a sampler
    """
    if i < 1:
        raise DomainError(f"moment order must be at least 1, got {i}")
    if mu.is_finite:
        values = [moment_kernel(atom.matrix) ** i for atom in mu.atoms]
        total = math.fsum(float(atom.weight) * v for atom, v in zip(mu.atoms, values, strict=True))
        return MomentReport(order=i, value=total, exact=True)
    if exact:
        raise UnsupportedForSampler(f"exact moment requested of sampler measure {mu.label}")
    sampler = sampler_for(mu)
    gen = generator_for(stream(master_seed, StreamPurpose.MOMENTS))
    draws_arr = sampler.increments(sampler.draw_keys(gen, draws))
    _, a, _ = batched_kak(draws_arr)
    values = _kernel(a) ** i
    return MomentReport(
        order=i,
        value=float(values.mean()),
        exact=False,
        std_error=float(values.std(ddof=1) / math.sqrt(draws)),
    )


def transpose_measure(mu: MatrixMeasure) -> MatrixMeasure:
    """Pushforward μᵗ under g ↦ gᵀ; weights and flags are kept."""
    if mu.is_finite:
        atoms = tuple(Atom(matrix=a.matrix.transpose(), weight=a.weight) for a in mu.atoms)
        return mu.model_copy(update={"atoms": atoms, "label": _transposed_label(mu.label)})
    sampler = mu.sampler.model_copy(update={"transpose": not mu.sampler.transpose})
    return mu.model_copy(update={"sampler": sampler, "label": _transposed_label(mu.label)})


def _transposed_label(label: str) -> str:
    return label[: -len("^t")] if label.endswith("^t") else f"{label}^t"


def wedge_measure(mu: MatrixMeasure, p: int) -> MatrixMeasure:
    """Pushforward under g ↦ ∧^p g.

    Algebraic flags are not inherited for p > 1: strong irreducibility of
    ∧^p Γ_μ does not follow from that of Γ_μ.

    Raises:
        DomainError: If p is outside [1, d]
        UnsupportedForSampler: If the sampler already carries a wedge
    """
    if not 1 <= p <= mu.dim:
        raise DomainError(f"wedge degree {p} outside [1, {mu.dim}]")
    if p == 1:
        return mu
    label = f"wedge{p}({mu.label})"
    if mu.is_finite:
        atoms = tuple(
            Atom(matrix=SquareMatrix(entries=compound(a.matrix.array, p)), weight=a.weight)
            for a in mu.atoms
        )
        return MatrixMeasure(
            dim=math.comb(mu.dim, p), kind="finite", atoms=atoms, label=label
        )
    if mu.sampler.wedge != 1:
        raise UnsupportedForSampler("nested wedge powers of a sampler are not supported")
    sampler = mu.sampler.model_copy(update={"wedge": p})
    return MatrixMeasure(dim=sampler.dim, kind="sampler", sampler=sampler, label=label)


def notconv_measure(lambda_: float, theta: float) -> MatrixMeasure:
    """μ = (1−θ)·δ_σ + θ·δ_{σa}, σ the quarter turn and a = diag(λ, λ⁻¹).

    The generated semigroup preserves {ℝe₁, ℝe₂}, so it is not strongly
    irreducible; ln ρ(Lₙ)/√n has no limit law.

    Raises:
        DomainError: If λ ≤ 1 or θ ∉ (0, 1)
    """
    if not lambda_ > 1.0:
        raise DomainError(f"lambda must exceed 1, got {lambda_}")
    if not 0.0 < theta < 1.0:
        raise DomainError(f"theta must lie in (0, 1), got {theta}")
    sigma = np.array(SIGMA)
    a = np.diag([lambda_, 1.0 / lambda_])
    return MatrixMeasure(
        dim=2,
        kind="finite",
        atoms=(
            Atom(matrix=sigma, weight=1.0 - theta),
            Atom(matrix=sigma @ a, weight=theta),
        ),
        flags=MeasureFlags(strongly_irreducible=False, proximal=True),
        label=f"notconv(lambda={lambda_!r},theta={theta!r})",
    )


def positive_pair_measure() -> MatrixMeasure:
    """Uniform on two positive SL₂(ℤ) matrices with distinct eigenbases."""
    return MatrixMeasure(
        dim=2,
        kind="finite",
        atoms=tuple(Atom(matrix=m, weight=Fraction(1, 2)) for m in POSITIVE_PAIR),
        flags=MeasureFlags(
            strongly_irreducible=True,
            proximal=True,
            zariski_dense=True,
            proximality_index_hint=1,
        ),
        label="positive_pair",
    )


def elementary_measure(dim: int) -> MatrixMeasure:
    """Uniform on the elementary matrices I + E_ij, i ≠ j.

    Raises:
        DomainError: If dim < 2
    """
    if dim < 2:
        raise DomainError(f"elementary ensemble needs dim >= 2, got {dim}")
    pairs = [(i, j) for i in range(dim) for j in range(dim) if i != j]
    atoms = []
    for i, j in pairs:
        m = np.eye(dim)
        m[i, j] = 1.0
        atoms.append(Atom(matrix=m, weight=Fraction(1, len(pairs))))
    return MatrixMeasure(
        dim=dim,
        kind="finite",
        atoms=tuple(atoms),
        flags=MeasureFlags(
            strongly_irreducible=True,
            proximal=True,
            zariski_dense=True,
            proximality_index_hint=1,
        ),
        label=f"elementary({dim})",
    )


def gaussian_sl_measure(dim: int) -> MatrixMeasure:
    """Gaussian-entry matrices rescaled to det 1."""
    if dim < 1:
        raise DomainError(f"dim must be positive, got {dim}")
    return MatrixMeasure(
        dim=dim,
        kind="sampler",
        sampler=SamplerSpec(base_dim=dim),
        flags=MeasureFlags(
            strongly_irreducible=True,
            proximal=True,
            zariski_dense=True,
            proximality_index_hint=1,
        ),
        label=f"gaussian_sl({dim})",
    )


def build_measure(spec: MeasureSpec) -> MatrixMeasure:
    """Turn the measure block of an experiment config into a measure."""
    if isinstance(spec, AtomsMeasureSpec):
        return MatrixMeasure(
            dim=spec.dim,
            kind="finite",
            atoms=tuple(Atom(matrix=a.matrix, weight=a.weight) for a in spec.atoms),
            flags=spec.flags,
            label=spec.label,
        )
    assert isinstance(spec, EnsembleMeasureSpec)
    match spec.ensemble:
        case "notconv":
            mu = notconv_measure(spec.lambda_, spec.theta)
        case "positive_pair":
            mu = positive_pair_measure()
        case "elementary":
            mu = elementary_measure(spec.dim)
        case "gaussian_sl":
            mu = gaussian_sl_measure(spec.dim)
    logger.debug(f"Built measure {mu.label} (dim={mu.dim}, kind={mu.kind})")
    return mu


# ---------------------------------------------------------------------------
# increment samplers
# ---------------------------------------------------------------------------


class IncrementSampler(ABC):
    """Draws increments from a measure, one generator per trial.

    ``draw_keys`` consumes the stream; ``increments`` and
    ``wedge_increments`` turn keys into matrices without touching it.
    Drawing k keys twice consumes the stream exactly like drawing 2k once.
    """

    dim: int

    @abstractmethod
    def draw_keys(self, gen: np.random.Generator, count: int) -> np.ndarray: ...

    @abstractmethod
    def increments(self, keys: np.ndarray) -> np.ndarray: ...

    @abstractmethod
    def wedge_increments(self, keys: np.ndarray, p: int) -> np.ndarray: ...

    def log_abs_det(self, keys: np.ndarray) -> np.ndarray:
        return np.linalg.slogdet(self.increments(keys))[1]


class FiniteSampler(IncrementSampler):
    """Alias-table sampling; keys are atom indices."""

    def __init__(self, mu: MatrixMeasure):
        self.dim = mu.dim
        self.atoms = mu.atom_stack()
        self.table = AliasTable(mu.weight_array())
        self._wedges = {p: compound(self.atoms, p) for p in range(2, mu.dim)}
        self._log_dets = np.linalg.slogdet(self.atoms)[1]

    def draw_keys(self, gen: np.random.Generator, count: int) -> np.ndarray:
        return self.table.draw(gen, count)

    def increments(self, keys: np.ndarray) -> np.ndarray:
        return self.atoms[keys]

    def wedge_increments(self, keys: np.ndarray, p: int) -> np.ndarray:
        return self._wedges[p][keys]

    def log_abs_det(self, keys: np.ndarray) -> np.ndarray:
        return self._log_dets[keys]


class GaussianSlSampler(IncrementSampler):
    """Keys are the Gaussian base matrices, already rescaled to det 1."""

    def __init__(self, spec: SamplerSpec):
        self.spec = spec
        self.base_dim = spec.base_dim
        self.dim = spec.dim

    def draw_keys(self, gen: np.random.Generator, count: int) -> np.ndarray:
        d = self.base_dim
        g = gen.standard_normal((count, d, d))
        det = np.linalg.det(g)
        g[det < 0, 0, :] *= -1.0
        return g / np.abs(det)[:, None, None] ** (1.0 / d)

    def _base(self, keys: np.ndarray) -> np.ndarray:
        return np.swapaxes(keys, -1, -2) if self.spec.transpose else keys

    def increments(self, keys: np.ndarray) -> np.ndarray:
        return compound(self._base(keys), self.spec.wedge)

    def wedge_increments(self, keys: np.ndarray, p: int) -> np.ndarray:
        return compound(self.increments(keys), p)


def sampler_for(mu: MatrixMeasure) -> IncrementSampler:
    if mu.is_finite:
        return FiniteSampler(mu)
    return GaussianSlSampler(mu.sampler)
