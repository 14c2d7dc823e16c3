"""Run configuration for the command line.

A config file holds dotenv-style `KEY=VALUE` lines whose keys are RunConfig
field names (case-insensitive). Values resolve as CLI flag > file > default.
"""

from pathlib import Path
from typing import Any, Literal, Optional

from dotenv import dotenv_values
from pydantic import BaseModel, ConfigDict, Field, ValidationError

from rabi_qst.errors import ConfigError
from rabi_qst.models import RabiConfig, StateAngles
from rabi_qst.rabi import X_RABI_PHASE, make_config
from rabi_qst.utils import config


class RunConfig(BaseModel):
    """Every tunable of every command; unknown keys are rejected."""

    model_config = ConfigDict(extra="forbid")

    # Global
    seed: int = Field(0, ge=0, lt=2**64)
    format: Literal["csv", "json"] = "csv"
    out: Optional[str] = None

    # Prepared state, degrees
    theta: float = Field(58.0, ge=0.0, le=180.0)
    phi: float = 249.0
    mode: Literal["electron", "nuclear"] = "electron"
    include_ref: bool = True

    # Trace synthesis
    rabi_frequency: float = Field(config.DEFAULT_RABI_FREQUENCY, gt=0.0)
    points: int = Field(config.DEFAULT_POINTS, ge=8)
    periods: float = Field(config.DEFAULT_PERIODS, gt=0.0)
    contrast: float = Field(config.DEFAULT_CONTRAST, gt=0.0, le=1.0)
    offset: float = config.DEFAULT_OFFSET
    decay_time: Optional[float] = Field(None, gt=0.0)
    noise_sigma: float = Field(0.0, ge=0.0)
    drift: float = Field(0.0, ge=0.0, lt=1.0)

    # Fitting and tomography
    method: Literal["raqst", "rpqst", "standard", "all"] = "all"
    shared_frequency: bool = True
    fit_decay: bool = False
    strict: bool = True

    # Sweeps
    sweep_method: Literal["raqst", "rpqst"] = "raqst"
    quantity: Literal["amplitude", "phase"] = "amplitude"
    eps: float = Field(0.01, ge=0.0)
    sweep_phi: float = config.DEFAULT_SWEEP_PHI_DEG
    theta_step: float = Field(5.0, gt=0.0, lt=90.0)
    both_signs: bool = False

    # Monte Carlo
    n_states: int = Field(40, ge=1)
    min_polar_deg: float = Field(0.0, ge=0.0, lt=90.0)
    workers: int = Field(1, ge=1)

    # Circuits
    u3_variant: Literal["corrected", "literal"] = "corrected"
    initial_pump: bool = True
    theta_r: float = 90.0  # degrees

    def state(self) -> StateAngles:
        return StateAngles.from_degrees(self.theta, self.phi)

    def rabi_config(self, axis_phase: float = X_RABI_PHASE) -> RabiConfig:
        return make_config(
            axis_phase=axis_phase,
            rabi_frequency=self.rabi_frequency,
            contrast=self.contrast,
            offset=self.offset,
            decay_time=self.decay_time,
            noise_sigma=self.noise_sigma,
            drift=self.drift,
            seed=self.seed,
            points=self.points,
            periods=self.periods,
        )

    def methods(self) -> list[str]:
        return ["raqst", "rpqst", "standard"] if self.method == "all" else [self.method]


def read_config_file(path: Path) -> dict[str, str]:
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}")
    values = dotenv_values(path)
    return {key.strip().lower(): value for key, value in values.items() if value not in (None, "")}


def load_run_config(path: Optional[Path] = None, overrides: Optional[dict[str, Any]] = None) -> RunConfig:
    """Merge defaults, an optional config file and CLI overrides (None means unset)."""
    merged: dict[str, Any] = read_config_file(path) if path else {}
    merged.update({k: v for k, v in (overrides or {}).items() if v is not None})
    try:
        return RunConfig.model_validate(merged)
    except ValidationError as e:
        raise ConfigError(f"Invalid run configuration: {e}") from e
