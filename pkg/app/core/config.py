"""Application settings using Pydantic Settings."""

from pydantic_settings import BaseSettings, SettingsConfigDict


class Settings(BaseSettings):
    """Runtime settings loaded from environment variables.

    Experiment parameters (measure, n, trials, seeds) are not settings; they
    come from the JSON experiment config. These are the knobs that shape how
    work is executed and how soft gates are calibrated.
    """

    model_config = SettingsConfigDict(
        env_file=".env",
        env_file_encoding="utf-8",
        extra="ignore",
    )

    # Project
    PROJECT_NAME: str = "specrad"
    LOG_LEVEL: str = "INFO"

    # Execution
    DEFAULT_THREADS: int | None = None  # None = available parallelism
    BLOCK_SIZE: int = 256  # trials per work unit; never derived from threads
    CHUNK_STEPS: int = 64  # increments drawn per stream call

    # Minimum sample sizes
    CLT_MIN_TRIALS: int = 1000
    LYAPUNOV_MIN_TRIALS: int = 30
    REGULARITY_MIN_POINTS: int = 1000

    # Statistics
    WILSON_Z: float = 1.96
    KS_SLACK: float = 2.0
    PILOT_FACTOR: int = 4
    COUNTEREXAMPLE_REFERENCE_DRAWS: int = 100_000


settings = Settings()
