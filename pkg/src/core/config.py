"""Configuration management with Pydantic Settings."""

from typing import Literal

from pydantic import Field, ValidationError
from pydantic_settings import BaseSettings, SettingsConfigDict

from .exceptions import ConfigurationException


class Settings(BaseSettings):
    """Toolkit settings with validation."""

    # Runtime
    LOG_LEVEL: Literal["DEBUG", "INFO", "WARNING", "ERROR"] = "INFO"
    LOG_FORMAT: Literal["json", "console"] = "json"
    JOBS: int = Field(default=1, ge=1, le=256)

    # Size limits
    DENSE_LIMIT: int = Field(default=14, ge=1, le=16)
    ITERATIVE_LIMIT: int = Field(default=24, ge=1, le=30)
    APPLY_LIMIT: int = Field(default=30, ge=1, le=30)
    ENUMERATION_LIMIT: int = Field(default=24, ge=1, le=40)
    RDM_SUBSET_LIMIT: int = Field(default=12, ge=1, le=14)
    RDM_MAX_SUBSETS: int = Field(default=10_000, ge=1)
    GF2_DENSE_LIMIT: int = Field(default=1 << 30, ge=64)  # bits in the packed core matrix
    MAX_STATES: int = Field(default=4096, ge=1)

    # Kernel and SAT decision
    KERNEL_TOL_FACTOR: float = Field(default=1e-10, gt=0.0, le=1e-3)
    GAP_RATIO: float = Field(default=1e3, ge=1.0)
    EMPTY_GAP_RATIO: float = Field(default=10.0, ge=1.0)
    TOL_ZERO: float = Field(default=1e-9, gt=0.0)
    TOL_GAP: float = Field(default=1e-8, gt=0.0)
    MAX_ITERS: int = Field(default=5000, ge=1)  # ARPACK restarts
    LANCZOS_KRYLOV_DIM: int = Field(default=40, ge=5, le=400)
    LANCZOS_TOL: float = Field(default=1e-12, gt=0.0)
    RANK_TOL: float = Field(default=1e-10, gt=0.0)

    # Product-state construction
    HOMOTOPY_STEPS: int = Field(default=200, ge=1)
    HOMOTOPY_TOL: float = Field(default=1e-12, gt=0.0)
    JACOBIAN_RANK_TOL: float = Field(default=1e-10, gt=0.0)
    NEWTON_MAX_ITERS: int = Field(default=50, ge=1)
    NEWTON_MAX_HALVINGS: int = Field(default=30, ge=0)
    CONTINUATION_RETRIES: int = Field(default=4, ge=1, le=20)
    SEARCH_STARTS: int = Field(default=50, ge=1)
    SEARCH_MAX_ITERS: int = Field(default=200, ge=1)
    PARALLEL_FACTOR_TOL: float = Field(default=1e-8, gt=0.0)
    DISTINCT_FIDELITY_TOL: float = Field(default=1e-8, gt=0.0)

    # Quadrature
    QUAD_EPSABS: float = Field(default=1e-10, gt=0.0)
    QUAD_EPSREL: float = Field(default=1e-10, gt=0.0)
    QUAD_LIMIT: int = Field(default=200, ge=10)
    POISSON_TAIL_MASS: float = Field(default=1e-12, gt=0.0, lt=1e-3)

    model_config = SettingsConfigDict(
        env_file=".env",
        env_prefix="QSAT_",
        case_sensitive=True,
        extra="ignore",
    )


_settings: Settings | None = None


def get_settings() -> Settings:
    """Get or create settings singleton."""
    global _settings
    if _settings is None:
        try:
            _settings = Settings()
        except ValidationError as e:
            raise ConfigurationException(f"invalid QSAT_ settings: {e}") from e
    return _settings
