"""Driving probability measures μ on GL_d(ℝ).

A measure is either a finite list of weighted atoms or a named parametric
sampler. Algebraic hypotheses (strong irreducibility, proximality, Zariski
density) cannot be decided by sampling; they are asserted by whoever builds
the measure and consumed by the statistics layer.
"""

import math
from fractions import Fraction
from typing import Any, Literal, Self

import numpy as np
from pydantic import (
    BaseModel,
    ConfigDict,
    Field,
    field_serializer,
    field_validator,
    model_validator,
)

from app.domain.geometry import SquareMatrix

WEIGHT_TOL = 1e-12


class MeasureFlags(BaseModel):
    """User-asserted algebraic properties of the generated semigroup Γ_μ."""

    model_config = ConfigDict(frozen=True)

    strongly_irreducible: bool = False
    proximal: bool = False
    zariski_dense: bool = False
    proximality_index_hint: int | None = Field(default=None, ge=1)


class Atom(BaseModel):
    """One support point of a finite measure.

    Weights given as ``"p/q"`` strings (or Fractions) are kept exact.
    """

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    matrix: SquareMatrix
    weight: Fraction | float

    @field_validator("matrix", mode="before")
    @classmethod
    def _wrap_rows(cls, value: Any) -> Any:
        if isinstance(value, list | tuple | np.ndarray):
            return SquareMatrix(entries=value)
        return value

    @field_validator("weight", mode="before")
    @classmethod
    def _parse_weight(cls, value: Any) -> Any:
        if isinstance(value, str):
            try:
                return Fraction(value)
            except ValueError as e:
                raise ValueError(f"invalid weight {value!r}") from e
        if isinstance(value, int) and not isinstance(value, bool):
            return Fraction(value)
        return value

    @field_validator("weight")
    @classmethod
    def _positive(cls, value: Fraction | float) -> Fraction | float:
        if not value > 0:
            raise ValueError(f"atom weight must be positive, got {value}")
        return value

    @field_serializer("weight")
    def _serialize_weight(self, value: Fraction | float) -> str | float:
        if isinstance(value, Fraction):
            return str(value)
        return value


class SamplerSpec(BaseModel):
    """A parametric family, with the pushforwards applied on top of it."""

    model_config = ConfigDict(frozen=True)

    family: Literal["gaussian_sl"] = "gaussian_sl"
    base_dim: int = Field(default=2, ge=1)
    transpose: bool = False
    wedge: int = Field(default=1, ge=1)

    @property
    def dim(self) -> int:
        return math.comb(self.base_dim, self.wedge)


class MatrixMeasure(BaseModel):
    """A probability measure μ on GL_d(ℝ)."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    dim: int = Field(ge=1)
    kind: Literal["finite", "sampler"]
    atoms: tuple[Atom, ...] = ()
    sampler: SamplerSpec | None = None
    flags: MeasureFlags = Field(default_factory=MeasureFlags)
    label: str = "custom"

    @model_validator(mode="after")
    def _check(self) -> Self:
        hint = self.flags.proximality_index_hint
        if hint is not None and hint > self.dim:
            raise ValueError(f"proximality_index_hint {hint} exceeds dim {self.dim}")
        if self.kind == "sampler":
            if self.sampler is None:
                raise ValueError("sampler measures need a sampler spec")
            if self.sampler.wedge > self.sampler.base_dim:
                raise ValueError("wedge degree exceeds the base dimension")
            if self.sampler.dim != self.dim:
                raise ValueError(f"sampler produces dim {self.sampler.dim}, not {self.dim}")
            return self
        if not self.atoms:
            raise ValueError("finite measures need at least one atom")
        for atom in self.atoms:
            if atom.matrix.dim != self.dim:
                raise ValueError(
                    f"atom of dim {atom.matrix.dim} in a measure of dim {self.dim}"
                )
        weights = [atom.weight for atom in self.atoms]
        if all(isinstance(w, Fraction) for w in weights):
            if sum(weights, Fraction(0)) != 1:
                raise ValueError(f"weights sum to {sum(weights, Fraction(0))}, not 1")
        elif abs(sum(float(w) for w in weights) - 1.0) > WEIGHT_TOL:
            raise ValueError(f"weights sum to {sum(float(w) for w in weights)!r}, not 1")
        return self

    @property
    def is_finite(self) -> bool:
        return self.kind == "finite"

    def atom_stack(self) -> np.ndarray:
        """Atoms as an array of shape (k, d, d)."""
        return np.stack([atom.matrix.array for atom in self.atoms])

    def weight_array(self) -> np.ndarray:
        return np.array([float(atom.weight) for atom in self.atoms])


class MomentReport(BaseModel):
    """∫ l(g)^i dμ(g), exact for finite measures, estimated for samplers."""

    model_config = ConfigDict(frozen=True)

    order: int = Field(ge=1)
    value: float = Field(ge=0.0)
    exact: bool = True
    std_error: float | None = None
