"""Configuration management for Rabi QST."""

import math
import os
from pathlib import Path
from dotenv import load_dotenv

# Load environment variables from .env file
env_path = Path(__file__).parent.parent.parent.parent / ".env"
load_dotenv(env_path)


class Config:
    """Application configuration."""

    # Logging
    LOG_LEVEL = os.getenv("LOG_LEVEL", "INFO").upper()

    # Numeric tolerances (TOLERANCE is the single tunable knob)
    TOLERANCE = float(os.getenv("RABI_QST_TOLERANCE", "1e-12"))
    NORM_TOLERANCE = 1e-9
    EIGEN_TOLERANCE = 1e-10
    PURE_TOLERANCE = 1e-6
    CLAMP_WINDOW = 1e-6
    STANDARD_QST_PURITY_WINDOW = 1e-2

    # Trace defaults (ODMR-like contrast)
    DEFAULT_POINTS = 61
    DEFAULT_PERIODS = 3
    DEFAULT_CONTRAST = 0.3
    DEFAULT_OFFSET = 0.7
    DEFAULT_RABI_FREQUENCY = 2 * math.pi  # rad/us, i.e. 1 MHz

    # Fitting
    FIT_MAX_ITERATIONS = 200
    FIT_XTOL = 1e-10
    PHASE_THRESHOLD = 1e-6  # relative to fitted offset
    SHARED_FREQUENCY_SPREAD = 0.01

    # Sweeps
    DEFAULT_SWEEP_PHI_DEG = 30.0

    @classmethod
    def validate(cls):
        """Validate configuration."""
        errors = []

        if cls.LOG_LEVEL not in ("DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"):
            errors.append(f"LOG_LEVEL {cls.LOG_LEVEL!r} is not a logging level")
        if not 0 < cls.TOLERANCE < 1e-6:
            errors.append("RABI_QST_TOLERANCE must lie in (0, 1e-6)")

        if errors:
            raise ValueError(f"Configuration errors: {', '.join(errors)}")


# Singleton instance
config = Config()
