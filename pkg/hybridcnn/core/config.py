"""Application settings and configuration."""

from typing import Literal

from pydantic_settings import BaseSettings, SettingsConfigDict


class Settings(BaseSettings):
    """Process-level settings loaded from environment variables."""

    model_config = SettingsConfigDict(
        env_file=".env",
        env_file_encoding="utf-8",
        env_prefix="HYBRIDCNN_",
        case_sensitive=True,
        extra='ignore'  # Ignore extra env vars not defined in model
    )

    # Logging
    DEBUG: bool = False  # forces DEBUG level
    LOG_LEVEL: Literal["DEBUG", "INFO", "WARNING", "ERROR"] = "INFO"
    LOG_FILE: str | None = None

    # Numerics
    DTYPE: Literal["float32", "float64"] = "float32"  # float64 for gradient checks
    STRICT_MODE: bool = True  # division by an exact zero raises

    # Reproducibility / parallelism
    DEFAULT_SEED: int = 42
    NUM_WORKERS: int = 1

    # Checkpoint container
    CHECKPOINT_VERSION: int = 1


settings = Settings()
