"""
Process-wide settings with environment variable support
"""
from typing import Optional

from pydantic import Field
from pydantic_settings import BaseSettings, SettingsConfigDict


class Settings(BaseSettings):
    """Application settings with environment variable support"""

    model_config = SettingsConfigDict(env_file=".env", env_prefix="BJPA_", extra="ignore")

    # Logging settings
    log_level: str = Field(
        default="INFO",
        description="Logging level (DEBUG, INFO, WARNING, ERROR)"
    )

    log_format: str = Field(
        default="json",
        description="Log record format: json or text"
    )

    # Execution settings
    default_workers: Optional[int] = Field(
        default=None,
        description="Worker threads for sweeps; None uses the machine's CPU count"
    )

    default_seed: int = Field(
        default=0,
        description="Seed for the optimizer's lattice sampling"
    )

    sweep_point_cap: int = Field(
        default=1_000_000,
        description="Maximum number of points in one sweep grid"
    )

    # Numerical limits
    dense_eigensolve_limit: int = Field(
        default=2000,
        description="Largest node count solved with dense generalized eigh"
    )

    max_chain_nodes: int = Field(
        default=10_000,
        description="Largest supported chain (node count)"
    )

    gain_saturation_db: float = Field(
        default=60.0,
        description="Gain values above this are recorded as saturated"
    )


# Global settings instance
settings = Settings()
