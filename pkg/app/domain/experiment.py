"""Experiment configuration parsed from a single JSON document."""

from typing import Literal, Self

from pydantic import BaseModel, ConfigDict, Field, model_validator

from app.domain.measure import MeasureFlags
from app.domain.walk import U64, Side

EnsembleName = Literal["notconv", "positive_pair", "elementary", "gaussian_sl"]
OutputFormat = Literal["csv", "json", "both"]

# fields that change where or how fast a run happens, never what it computes
RUNTIME_FIELDS = frozenset({"threads", "out_dir"})


class AtomSpec(BaseModel):
    """One atom as written in a config file."""

    model_config = ConfigDict(extra="forbid", frozen=True)

    matrix: tuple[tuple[float, ...], ...]
    weight: float | str


class AtomsMeasureSpec(BaseModel):
    """Explicit finite measure: ``{"dim": d, "atoms": [...], "flags": {...}}``."""

    model_config = ConfigDict(extra="forbid", frozen=True)

    dim: int = Field(ge=1)
    atoms: tuple[AtomSpec, ...] = Field(min_length=1)
    flags: MeasureFlags = Field(default_factory=MeasureFlags)
    label: str = "custom"


class EnsembleMeasureSpec(BaseModel):
    """Named ensemble: ``{"ensemble": "notconv", "lambda": 2.0, "theta": 0.5}``."""

    model_config = ConfigDict(extra="forbid", frozen=True, populate_by_name=True)

    ensemble: EnsembleName
    lambda_: float = Field(default=2.0, alias="lambda")
    theta: float = 0.5
    dim: int = Field(default=2, ge=1)


MeasureSpec = AtomsMeasureSpec | EnsembleMeasureSpec


def _ascending(values: tuple[float, ...], name: str, positive: bool = True) -> None:
    if list(values) != sorted(values):
        raise ValueError(f"{name} must be sorted ascending")
    if positive and any(v <= 0 for v in values):
        raise ValueError(f"{name} must be positive")


class ExperimentConfig(BaseModel):
    """Everything a command needs to reproduce its artifact."""

    model_config = ConfigDict(extra="forbid", frozen=True)

    measure: MeasureSpec = Field(
        default_factory=lambda: EnsembleMeasureSpec(ensemble="positive_pair")
    )
    n: int = Field(default=200, ge=1)
    checkpoints: tuple[int, ...] | None = None
    trials: int = Field(default=1000, ge=1)
    master_seed: int = Field(default=0, ge=0, lt=U64)
    threads: int | None = Field(default=None, ge=1)
    side: Side = "left"
    full_spectrum: bool = True

    # tails and regularity
    eps_grid: tuple[float, ...] = (1e-4, 1e-3, 1e-2, 0.05, 0.1, 0.5, 0.9, 1.0)
    t_grid: tuple[float, ...] = (1e-4, 1e-3, 1e-2, 0.05, 0.1, 0.2, 0.5, 1.0)
    m_grid: tuple[float, ...] = (0.25, 0.5, 1.0, 2.0, 4.0, 8.0)
    hyperplane_count: int = Field(default=1000, ge=0)
    adaptive_points: int = Field(default=256, ge=0)
    stationary_points: int = Field(default=10_000, ge=1)
    stationary_n: int = Field(default=200, ge=1)
    proximality_index: int | None = Field(default=None, ge=1)
    bound_constant: float = Field(default=1.0, gt=0.0)

    # CLT
    observable: Literal["log_specrad", "log_norm"] = "log_specrad"
    centering: Literal["pilot", "in_sample"] = "pilot"
    pilot_n: int | None = Field(default=None, ge=1)
    pilot_trials: int | None = Field(default=None, ge=30)

    # decay suite
    decay_item: int = Field(default=2, ge=1, le=5)
    n_grid: tuple[int, ...] = (25, 50, 100, 200)
    decay_rate: float | None = Field(default=None, gt=0.0)
    decay_eps: float = Field(default=0.05, gt=0.0)
    coupling_n: int | None = Field(default=None, ge=1)

    # soft KS gates
    ks_threshold: float | None = Field(default=None, gt=0.0)  # None = KS_SLACK·1.36/√trials

    # certify
    matrix_path: str | None = None
    batch: int | None = Field(default=None, ge=1)

    # output
    out_dir: str = "artifacts"
    format: OutputFormat = "both"

    @model_validator(mode="after")
    def _check(self) -> Self:
        if self.checkpoints is not None:
            _ascending(tuple(float(c) for c in self.checkpoints), "checkpoints")
            if len(set(self.checkpoints)) != len(self.checkpoints):
                raise ValueError("checkpoints must be distinct")
            if self.checkpoints[-1] > self.n:
                raise ValueError(f"checkpoint {self.checkpoints[-1]} exceeds n={self.n}")
        _ascending(self.eps_grid, "eps_grid")
        _ascending(self.t_grid, "t_grid")
        _ascending(self.m_grid, "m_grid")
        _ascending(tuple(float(v) for v in self.n_grid), "n_grid")
        if self.coupling_n is not None and self.n_grid and self.coupling_n <= self.n_grid[-1]:
            raise ValueError("coupling_n must exceed every n in n_grid")
        return self

    @property
    def effective_checkpoints(self) -> tuple[int, ...]:
        return self.checkpoints if self.checkpoints is not None else (self.n,)

    def echo(self) -> dict:
        """JSON-ready dump that reparses to an equal config."""
        return self.model_dump(mode="json", by_alias=True)

    def artifact_echo(self) -> dict:
        """The echo without runtime fields, as embedded in artifacts."""
        return self.model_dump(mode="json", by_alias=True, exclude=set(RUNTIME_FIELDS))
