"""
Process-wide defaults, overridable through RLSN_* environment variables or a
.env file.
"""

from pydantic_settings import BaseSettings, SettingsConfigDict


class Settings(BaseSettings):
    LOG_LEVEL: str = "INFO"
    LOG_FILE: str = ""

    DEFAULT_SEED: int = 0
    DEFAULT_DELTA: float = 0.01

    # Spectral error estimation
    SUBSET_SIZE: int = 20000
    POWER_ITERATIONS: int = 100
    POWER_TOLERANCE: float = 1e-6
    BLOCK_SIZE: int = 2048

    # Benchmarks
    RESULTS_DIR: str = "results"
    MAX_WORKERS: int = 1

    model_config = SettingsConfigDict(
        env_prefix="RLSN_",
        env_file=".env",
        case_sensitive=True,
        extra="ignore"
    )


_settings_instance = None


def get_settings() -> Settings:
    """Get the global settings instance."""
    global _settings_instance

    if _settings_instance is None:
        _settings_instance = Settings()

    return _settings_instance
