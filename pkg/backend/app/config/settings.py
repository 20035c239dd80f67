"""
Application settings with validation and type safety
"""

from functools import lru_cache

from pydantic import Field, field_validator
from pydantic_settings import BaseSettings, SettingsConfigDict


class Settings(BaseSettings):
    """
    Validated configuration for solvers, Monte Carlo runs and logging
    All settings can be overridden via environment variables or a .env file
    """

    model_config = SettingsConfigDict(
        env_file=".env",
        env_file_encoding="utf-8",
        case_sensitive=False,
        # Allow extra fields for forward compatibility
        extra="ignore",
    )

    # VALUE ITERATION
    vi_tolerance: float = Field(
        default=1e-9,
        gt=0.0,
        le=1e-3,
        description="Sup-norm change at which value iteration stops"
    )

    vi_max_iters: int = Field(
        default=100_000,
        ge=1,
        description="Maximum value-iteration sweeps before ConvergenceError"
    )

    beta_average: float = Field(
        default=0.999,
        gt=0.0,
        lt=1.0,
        description="Discount factor used to approximate average-cost optimal policies"
    )

    # BELIEF GRID
    grid_resolution: int = Field(
        default=40,
        ge=1,
        le=1000,
        description="Belief grid resolution k (coordinates in multiples of 1/k)"
    )

    slack_resolution: int = Field(
        default=80,
        ge=0,
        le=2000,
        description="Finer grid used to quantify discretization slack (0 disables)"
    )

    # EVALUATION
    truncation_tolerance_factor: float = Field(
        default=1e-6,
        gt=0.0,
        lt=1.0,
        description="Discounted truncation tolerance as a fraction of ||c||/(1-beta)"
    )

    enumeration_limit: int = Field(
        default=10_000_000,
        ge=1,
        description="Maximum number of joint paths an exact enumeration may visit"
    )

    average_horizon: int = Field(
        default=2000,
        ge=2,
        description="Horizon T for average-cost estimates"
    )

    decomposition_steps: int = Field(
        default=5,
        ge=0,
        description="Largest n reported by the three-cost decomposition"
    )

    # MONTE CARLO
    default_samples: int = Field(
        default=100_000,
        ge=2,
        description="Default number of Monte Carlo paths"
    )

    default_seed: int = Field(
        default=0,
        ge=0,
        description="Default Monte Carlo seed"
    )

    mc_partition_size: int = Field(
        default=10_000,
        ge=1,
        description="Paths per Monte Carlo partition (fixes the random stream layout)"
    )

    mc_workers: int = Field(
        default=1,
        ge=1,
        le=64,
        description="Worker threads evaluating Monte Carlo partitions"
    )

    # RUNTIME
    environment: str = Field(
        default="production",
        description="Deployment environment (development/test/production)"
    )

    # LOGGING CONFIGURATION
    log_level: str = Field(
        default="WARNING",
        description="Logging level (DEBUG/INFO/WARNING/ERROR)"
    )

    log_format: str = Field(
        default="text",
        description="Log format (json/text)"
    )

    # VALIDATION
    @field_validator("environment")
    @classmethod
    def validate_environment(cls, v: str) -> str:
        """Ensure valid environment name"""
        valid_environments = {"development", "test", "production"}
        if v not in valid_environments:
            raise ValueError(f"Environment must be one of: {valid_environments}")
        return v

    @field_validator("log_level")
    @classmethod
    def validate_log_level(cls, v: str) -> str:
        """Ensure valid log level"""
        valid_levels = {"DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"}
        if v.upper() not in valid_levels:
            raise ValueError(f"Log level must be one of: {valid_levels}")
        return v.upper()

    @field_validator("log_format")
    @classmethod
    def validate_log_format(cls, v: str) -> str:
        """Ensure valid log format"""
        if v.lower() not in {"json", "text"}:
            raise ValueError("Log format must be 'json' or 'text'")
        return v.lower()

    @field_validator("slack_resolution")
    @classmethod
    def validate_slack_resolution(cls, v: int) -> int:
        """A slack grid of resolution 1 cannot refine anything"""
        if v == 1:
            raise ValueError("slack_resolution must be 0 (disabled) or at least 2")
        return v


@lru_cache(maxsize=1)
def get_settings() -> Settings:
    """Return the process-wide settings instance"""
    return Settings()
