"""
Settings and configuration for halfmaxent.
Centralized configuration management.
"""

from pathlib import Path
from typing import Optional

from pydantic_settings import BaseSettings, SettingsConfigDict


class Settings(BaseSettings):
    """Application settings."""

    model_config = SettingsConfigDict(
        env_file=".env",
        env_prefix="HALFMAXENT_",
        case_sensitive=True,
        extra="ignore",
    )

    # App Config
    APP_NAME: str = "halfmaxent"
    APP_VERSION: str = "1.0.0"

    # Logging
    LOG_LEVEL: str = "INFO"
    LOG_TO_FILE: bool = False

    # Selection thresholds (relative ratios ||psi||^2 / ||alpha||^2)
    DEPENDENCE_THRESHOLD: float = 1e-12
    PRESELECT_THRESHOLD: float = 1e-10

    # Stopping factors
    DEFAULT_FORWARD_T: float = 1.1
    DEFAULT_PRUNE_T: float = 2.0

    # Recompute duals from a Gram solve every N extensions (None = never)
    REORTHOGONALIZE_EVERY: Optional[int] = None

    # Oracle
    ORACLE_MAX_CONDITION: float = 1e12

    # Synthetic data
    SIGMA_FLOOR_FACTOR: float = 1e-12
    RNG_ALGORITHM: str = "PCG64"  # numpy Generator, ziggurat normals

    # Output
    REPORT_TIMING: bool = True
    CSV_FLOAT_FORMAT: str = "%.17g"

    # Directories
    BASE_DIR: Path = Path(__file__).resolve().parent.parent
    OUTPUT_DIR: Path = Path(".")
    LOG_DIR: Path = BASE_DIR / "logs"

    def __init__(self, **data):
        super().__init__(**data)
        if self.LOG_TO_FILE:
            self.LOG_DIR.mkdir(exist_ok=True)


# Global settings instance
settings = Settings()
