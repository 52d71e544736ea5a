"""
Process settings.
Uses environment variables with sensible defaults.
"""

import os
from dotenv import load_dotenv

load_dotenv()

# Documented fixed seed used whenever neither the config nor a flag names one.
DEFAULT_SEED = 20100101


def _env_bool(name: str, default: str = "false") -> bool:
    return os.getenv(name, default).strip().lower() in ("1", "true", "yes", "on")


class Settings:
    """Process settings loaded from environment."""

    # Logging
    DEBUG: bool = _env_bool("URBAN_GROWTH_DEBUG")
    LOG_DIR: str = os.getenv("URBAN_GROWTH_LOG_DIR", "")

    # Reproducibility: never seeded from the wall clock
    SEED: int = int(os.getenv("URBAN_GROWTH_SEED", str(DEFAULT_SEED)))

    # Worker processes for Monte Carlo runs and calibration sweeps
    JOBS: int = max(1, int(os.getenv("URBAN_GROWTH_JOBS", "1")))

    OUTPUT_DIR: str = os.getenv("URBAN_GROWTH_OUTPUT_DIR", "output")


# Global settings instance
settings = Settings()
