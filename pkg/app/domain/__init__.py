# Domain layer - value objects, reports, configuration and errors

from .errors import (
    CertificateContractViolation,
    ConfigError,
    DegenerateVariance,
    DomainError,
    EigenFailure,
    EmptyInput,
    FlagViolation,
    InsufficientSamples,
    InvariantViolation,
    NumericalFailure,
    SingularInput,
    SpecradError,
    StepOverflow,
    UnsupportedForSampler,
)
from .experiment import (
    AtomSpec,
    AtomsMeasureSpec,
    EnsembleMeasureSpec,
    ExperimentConfig,
    MeasureSpec,
)
from .geometry import (
    CartanVector,
    ContractionData,
    JordanVector,
    KakDecomposition,
    ProjHyperplane,
    ProjPoint,
    ProximalityCertificate,
    SquareMatrix,
)
from .measure import Atom, MatrixMeasure, MeasureFlags, MomentReport, SamplerSpec
from .reports import (
    BatchCertifyReport,
    CertificateRate,
    CertificateReport,
    CltReport,
    ComparisonRow,
    CounterexampleReport,
    CovarianceReport,
    DecayCurve,
    IndependenceReport,
    LyapunovEstimate,
    RegularityProfile,
    TailCurve,
)
from .walk import RngStream, SampleSet, Side, WalkSample, WalkState

__all__ = [
    # errors
    "CertificateContractViolation",
    "ConfigError",
    "DegenerateVariance",
    "DomainError",
    "EigenFailure",
    "EmptyInput",
    "FlagViolation",
    "InsufficientSamples",
    "InvariantViolation",
    "NumericalFailure",
    "SingularInput",
    "SpecradError",
    "StepOverflow",
    "UnsupportedForSampler",
    # configuration
    "AtomSpec",
    "AtomsMeasureSpec",
    "EnsembleMeasureSpec",
    "ExperimentConfig",
    "MeasureSpec",
    # geometry
    "CartanVector",
    "ContractionData",
    "JordanVector",
    "KakDecomposition",
    "ProjHyperplane",
    "ProjPoint",
    "ProximalityCertificate",
    "SquareMatrix",
    # measures
    "Atom",
    "MatrixMeasure",
    "MeasureFlags",
    "MomentReport",
    "SamplerSpec",
    # walks
    "RngStream",
    "SampleSet",
    "Side",
    "WalkSample",
    "WalkState",
    # reports
    "BatchCertifyReport",
    "CertificateRate",
    "CertificateReport",
    "CltReport",
    "ComparisonRow",
    "CounterexampleReport",
    "CovarianceReport",
    "DecayCurve",
    "IndependenceReport",
    "LyapunovEstimate",
    "RegularityProfile",
    "TailCurve",
]
