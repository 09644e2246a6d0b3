"""Linear algebra and projective geometry value objects.

Matrices and projective points are backed by read-only numpy arrays. All
models are frozen, so they can be shared freely between worker threads.
"""

import math
from typing import Any, Self

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_serializer, model_validator

from app.domain.errors import SingularInput

INVERTIBILITY_TOL = 1e-12
DEGENERATE_GAP_TOL = 1e-9
ORTHOGONALITY_TOL = 1e-10
RECONSTRUCTION_TOL = 1e-10
# entries below this magnitude are skipped when choosing the sign
SIGN_TOL = 1e-12


def canonical_sign(vec: np.ndarray) -> np.ndarray:
    """Flip ``vec`` so that its first non-negligible coordinate is positive."""
    idx = np.flatnonzero(np.abs(vec) > SIGN_TOL)
    if idx.size and vec[idx[0]] < 0:
        return -vec
    return vec


def _hashable(value: Any) -> Any:
    if isinstance(value, np.ndarray):
        return (value.shape, value.dtype.str, value.tobytes())
    if isinstance(value, tuple | list):
        return tuple(_hashable(v) for v in value)
    if isinstance(value, dict):
        return tuple(sorted((k, _hashable(v)) for k, v in value.items()))
    return value


def _frozen(arr: np.ndarray) -> np.ndarray:
    arr = np.array(arr, dtype=float)
    arr.setflags(write=False)
    return arr


class ArrayModel(BaseModel):
    """Frozen model whose payload is numpy data.

    pydantic compares fields with ``==`` which is ambiguous for arrays, so
    equality and hashing are redefined on the raw bytes.
    """

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    def _payload(self) -> tuple:
        return tuple(_hashable(v) for v in self.__dict__.values())

    def __eq__(self, other: object) -> bool:
        if type(other) is not type(self):
            return NotImplemented
        return self._payload() == other._payload()

    def __hash__(self) -> int:
        return hash(self._payload())


class SquareMatrix(ArrayModel):
    """A dense d×d real invertible matrix.

    Invertibility is checked on construction: the smallest singular value
    must exceed ``INVERTIBILITY_TOL`` times the largest.
    """

    entries: np.ndarray

    @model_validator(mode="before")
    @classmethod
    def _coerce(cls, data: Any) -> Any:
        if not isinstance(data, dict):
            return data
        arr = np.array(data.get("entries"), dtype=float)
        if arr.ndim != 2 or arr.shape[0] != arr.shape[1] or arr.shape[0] == 0:
            raise ValueError(f"matrix must be square and non-empty, got shape {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise ValueError("matrix entries must be finite")
        svals = np.linalg.svd(arr, compute_uv=False)
        if not svals[-1] > INVERTIBILITY_TOL * svals[0]:
            raise SingularInput(
                f"smallest singular value {svals[-1]:.3e} is below "
                f"{INVERTIBILITY_TOL:g} x largest ({svals[0]:.3e})"
            )
        return {**data, "entries": _frozen(arr)}

    @classmethod
    def of(cls, rows: Any) -> Self:
        """Build from nested rows or an array."""
        return cls(entries=rows)

    @classmethod
    def identity(cls, dim: int) -> Self:
        return cls(entries=np.eye(dim))

    @property
    def dim(self) -> int:
        return self.entries.shape[0]

    @property
    def array(self) -> np.ndarray:
        """Read-only view of the entries."""
        return self.entries

    def to_rows(self) -> list[list[float]]:
        return self.entries.tolist()

    def transpose(self) -> "SquareMatrix":
        return SquareMatrix(entries=self.entries.T)

    @field_serializer("entries")
    def _serialize_entries(self, value: np.ndarray) -> list[list[float]]:
        return value.tolist()


class KakDecomposition(ArrayModel):
    """g = k · diag(a) · u with k, u orthogonal and a non-increasing."""

    k: np.ndarray
    a: np.ndarray
    u: np.ndarray

    @model_validator(mode="after")
    def _check(self) -> Self:
        if np.any(np.diff(self.a) > 0) or not np.all(self.a > 0):
            raise ValueError("singular values must be positive and non-increasing")
        eye = np.eye(self.a.size)
        for name, q in (("k", self.k), ("u", self.u)):
            if np.max(np.abs(q.T @ q - eye)) > ORTHOGONALITY_TOL:
                raise ValueError(f"{name} is not orthogonal")
        return self

    @property
    def gap_ratio(self) -> float:
        """a₂/a₁, or 0 in dimension one."""
        if self.a.size < 2:
            return 0.0
        return float(self.a[1] / self.a[0])

    @property
    def degenerate(self) -> bool:
        """True when the top singular value is (numerically) tied."""
        return self.gap_ratio > 1.0 - DEGENERATE_GAP_TOL

    def reconstruct(self) -> np.ndarray:
        return (self.k * self.a) @ self.u

    @field_serializer("k", "a", "u")
    def _serialize(self, value: np.ndarray) -> list:
        return value.tolist()


class ProjPoint(ArrayModel):
    """A point [v] of P(V), stored as a unit vector with canonical sign."""

    vec: np.ndarray
    degenerate: bool = False

    @model_validator(mode="before")
    @classmethod
    def _normalize(cls, data: Any) -> Any:
        if not isinstance(data, dict):
            return data
        vec = np.array(data.get("vec"), dtype=float).reshape(-1)
        norm = float(np.linalg.norm(vec))
        if not np.isfinite(norm) or norm == 0.0:
            raise ValueError("a projective point needs a finite nonzero representative")
        return {**data, "vec": _frozen(canonical_sign(vec / norm))}

    @property
    def dim(self) -> int:
        return self.vec.size

    @field_serializer("vec")
    def _serialize_vec(self, value: np.ndarray) -> list[float]:
        return value.tolist()


class ProjHyperplane(ArrayModel):
    """A projective hyperplane [ker f], stored by its unit normal."""

    normal: np.ndarray
    degenerate: bool = False

    @model_validator(mode="before")
    @classmethod
    def _normalize(cls, data: Any) -> Any:
        if not isinstance(data, dict):
            return data
        normal = np.array(data.get("normal"), dtype=float).reshape(-1)
        norm = float(np.linalg.norm(normal))
        if not np.isfinite(norm) or norm == 0.0:
            raise ValueError("a hyperplane needs a finite nonzero normal")
        return {**data, "normal": _frozen(canonical_sign(normal / norm))}

    @property
    def dim(self) -> int:
        return self.normal.size

    @field_serializer("normal")
    def _serialize_normal(self, value: np.ndarray) -> list[float]:
        return value.tolist()


def _check_non_increasing(values: tuple[float, ...]) -> None:
    scale = max([1.0, *(abs(v) for v in values if math.isfinite(v))])
    for prev, cur in zip(values, values[1:], strict=False):
        if cur > prev + 1e-9 * scale:
            raise ValueError(f"values must be non-increasing, got {values}")


class CartanVector(BaseModel):
    """Natural logs of the singular values, in non-increasing order."""

    model_config = ConfigDict(frozen=True)

    values: tuple[float, ...]

    @model_validator(mode="after")
    def _check(self) -> Self:
        _check_non_increasing(self.values)
        return self


class JordanVector(BaseModel):
    """Natural logs of the eigenvalue moduli, in non-increasing order."""

    model_config = ConfigDict(frozen=True)

    values: tuple[float, ...]

    @model_validator(mode="after")
    def _check(self) -> Self:
        _check_non_increasing(self.values)
        return self

    @property
    def moduli(self) -> tuple[float, ...]:
        return tuple(math.exp(v) for v in self.values)


class ProximalityCertificate(BaseModel):
    """Witness that δ(v⁺, H⁻) > 2·sqrt(a₂/a₁), hence ρ(g)/‖g‖ ≥ δ/2."""

    model_config = ConfigDict(frozen=True)

    delta_g: float = Field(gt=0.0, le=1.0)
    gap_ratio: float = Field(ge=0.0, le=1.0)
    lower_bound: float

    @model_validator(mode="after")
    def _check(self) -> Self:
        if not self.delta_g > 2.0 * math.sqrt(self.gap_ratio):
            raise ValueError("certificate hypothesis δ_g > 2·sqrt(a₂/a₁) does not hold")
        if not math.isclose(self.lower_bound, self.delta_g / 2.0):
            raise ValueError("lower_bound must equal delta_g / 2")
        return self


class ContractionData(BaseModel):
    """Bounds on the action of g away from its repelling hyperplane."""

    model_config = ConfigDict(frozen=True)

    lipschitz_bound: float = Field(ge=0.0)
    image_radius: float = Field(ge=0.0)
