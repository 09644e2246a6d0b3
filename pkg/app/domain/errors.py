"""Domain errors.

Every error carries a human readable ``reason``. They subclass ``Exception``
rather than ``ValueError`` so that raising them inside a pydantic validator
propagates the error itself instead of a ``ValidationError``.
"""


class SpecradError(Exception):
    """Base class for all domain errors."""

    def __init__(self, reason: str):
        self.reason = reason
        super().__init__(reason)


class SingularInput(SpecradError):
    """Raised when a matrix is not numerically invertible."""


class _BatchError(SpecradError):
    """An error raised by a batched kernel, optionally locating the bad row."""

    def __init__(self, reason: str, row: int | None = None):
        self.row = row
        super().__init__(reason)


class EigenFailure(_BatchError):
    """Raised when the eigenvalue routine does not converge."""


class DomainError(SpecradError):
    """Raised when a parameter lies outside its admissible range."""


class UnsupportedForSampler(SpecradError):
    """Raised when an exact answer is requested of a sampler measure."""


class StepOverflow(_BatchError):
    """Raised when a walk product becomes non-finite before renormalization."""


class InsufficientSamples(SpecradError):
    """Raised when an estimator receives fewer samples than it needs."""


class DegenerateVariance(SpecradError):
    """Raised when the CLT variance vanishes although the flags promise otherwise."""


class EmptyInput(SpecradError):
    """Raised when a statistic receives an empty sample."""


class FlagViolation(SpecradError):
    """Raised when an operation needs algebraic flags the measure does not assert."""


class InvariantViolation(SpecradError):
    """Raised when an exact (non-statistical) invariant fails."""


class CertificateContractViolation(SpecradError):
    """Raised when a proximality certificate exists but its bound fails."""


class ConfigError(SpecradError):
    """Raised for unusable experiment configuration."""


class NumericalFailure(SpecradError):
    """A numerical error raised inside a Monte Carlo trial."""

    def __init__(self, reason: str, trial: int):
        self.trial = trial
        super().__init__(f"trial {trial}: {reason}")
