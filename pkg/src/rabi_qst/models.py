"""Pydantic models for states, traces, fits and tomography results."""

import math
from typing import Literal, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, computed_field, field_validator, model_validator

TWO_PI = 2 * math.pi

Method = Literal["RAQST", "RPQST", "STANDARD"]


def wrap_phase(phi: float) -> float:
    """Map an angle into [0, 2π)."""
    wrapped = math.fmod(phi, TWO_PI)
    if wrapped < 0:
        wrapped += TWO_PI
    if wrapped >= TWO_PI:
        wrapped = 0.0
    return wrapped + 0.0  # no negative zero


# State representations
class BlochVector(BaseModel):
    """Bloch vector (n_x, n_y, n_z) of a qubit state."""

    model_config = ConfigDict(frozen=True)

    nx: float
    ny: float
    nz: float

    @property
    def norm(self) -> float:
        return math.sqrt(self.nx**2 + self.ny**2 + self.nz**2)

    def as_array(self) -> np.ndarray:
        return np.array([self.nx, self.ny, self.nz], dtype=float)

    @classmethod
    def from_array(cls, values) -> "BlochVector":
        nx, ny, nz = (float(v) for v in values)
        return cls(nx=nx, ny=ny, nz=nz)


class StateAngles(BaseModel):
    """Polar angle theta in [0, π] and azimuth phi in [0, 2π), radians."""

    model_config = ConfigDict(frozen=True)

    theta: float = Field(..., ge=0.0, le=math.pi)
    phi: float = Field(0.0, ge=0.0, lt=TWO_PI)
    phi_undefined: bool = False

    @classmethod
    def from_degrees(cls, theta_deg: float, phi_deg: float) -> "StateAngles":
        """Build angles from degrees; the only degree-to-radian conversion site."""
        theta = math.radians(theta_deg)
        if not 0.0 <= theta_deg <= 180.0:
            raise ValueError(f"theta must lie in [0, 180] degrees, got {theta_deg}")
        return cls(theta=min(theta, math.pi), phi=wrap_phase(math.radians(phi_deg)))

    @property
    def theta_deg(self) -> float:
        return math.degrees(self.theta)

    @property
    def phi_deg(self) -> float:
        return math.degrees(self.phi)


class DensityMatrixModel(BaseModel):
    """JSON form of a density matrix: {"dim": d, "re": [[...]], "im": [[...]]}."""

    dim: int
    re: list[list[float]]
    im: list[list[float]]

    @classmethod
    def from_array(cls, rho: np.ndarray) -> "DensityMatrixModel":
        rho = np.asarray(rho, dtype=complex)
        return cls(dim=rho.shape[0], re=rho.real.tolist(), im=rho.imag.tolist())

    def to_array(self) -> np.ndarray:
        return np.array(self.re, dtype=float) + 1j * np.array(self.im, dtype=float)


# Rabi simulation
class RabiConfig(BaseModel):
    """Parameters of one simulated Rabi experiment."""

    model_config = ConfigDict(extra="forbid", frozen=True)

    axis_phase: float = 0.0  # ζ, radians; 0 = x-Rabi, π/2 = y-Rabi
    rabi_frequency: float = Field(..., gt=0.0)  # Ω, rad/us
    time_grid: list[float]  # us
    contrast: float = Field(..., gt=0.0, le=1.0)
    offset: float = 0.0
    decay_time: Optional[float] = Field(None, gt=0.0)  # us
    noise_sigma: float = Field(0.0, ge=0.0)
    drift: float = Field(0.0, ge=0.0, lt=1.0)  # fractional contrast loss across one trace
    seed: int = Field(0, ge=0, lt=2**64)

    @field_validator("time_grid")
    @classmethod
    def _check_grid(cls, grid: list[float]) -> list[float]:
        if len(grid) < 8:
            raise ValueError(f"time grid needs at least 8 points, got {len(grid)}")
        if any(not math.isfinite(t) for t in grid):
            raise ValueError("time grid contains non-finite values")
        if any(b <= a for a, b in zip(grid, grid[1:])):
            raise ValueError("time grid must be strictly increasing")
        return grid


class RabiTrace(BaseModel):
    """Time series of readout signal from one Rabi experiment."""

    label: str = "x"
    times: list[float]
    signal: list[float]
    meta: dict = Field(default_factory=dict)

    @model_validator(mode="after")
    def _check_lengths(self) -> "RabiTrace":
        if len(self.times) != len(self.signal):
            raise ValueError("times and signal must have equal lengths")
        if not all(math.isfinite(v) for v in self.signal):
            raise ValueError("signal contains non-finite values")
        return self

    @property
    def t(self) -> np.ndarray:
        return np.asarray(self.times, dtype=float)

    @property
    def y(self) -> np.ndarray:
        return np.asarray(self.signal, dtype=float)


# Fitting
class SineFit(BaseModel):
    """Fitted y(t) = O + A cos(Ωt + ψ) [· exp(−t/T)] of a Rabi trace."""

    amplitude: float = Field(..., ge=0.0)
    phase: float = Field(..., ge=0.0, lt=TWO_PI)
    frequency: float = Field(..., gt=0.0)
    offset: float
    decay_time: Optional[float] = None
    residual_rms: float = 0.0
    param_stderr: dict[str, Optional[float]] = Field(default_factory=dict)
    phase_defined: bool = True
    converged: bool = True
    iterations: int = 0
    flags: list[str] = Field(default_factory=list)

    @property
    def signed_phase(self) -> float:
        """Principal value of the phase in (−π, π]."""
        return self.phase - TWO_PI if self.phase > math.pi else self.phase

    def evaluate(self, times) -> np.ndarray:
        t = np.asarray(times, dtype=float)
        envelope = np.exp(-t / self.decay_time) if self.decay_time else 1.0
        return self.offset + self.amplitude * np.cos(self.frequency * t + self.phase) * envelope


# Tomography
class TomographyResult(BaseModel):
    """Reconstructed single-qubit state."""

    method: Method
    bloch: BlochVector
    angles: StateAngles
    rho: DensityMatrixModel
    fidelity_vs_target: Optional[float] = None
    diagnostics: dict = Field(default_factory=dict)

    @computed_field
    @property
    def angles_deg(self) -> dict[str, float]:
        return {"theta": self.angles.theta_deg, "phi": self.angles.phi_deg}


class DensityBar(BaseModel):
    """One matrix element of the experimental and expected density matrices."""

    row: int
    col: int
    re_exp: float
    im_exp: float
    re_th: float
    im_th: float


class TomographyReport(BaseModel):
    """Comparison of a reconstruction against a target state."""

    method: Method
    rho_exp: DensityMatrixModel
    rho_th: DensityMatrixModel
    fidelity: float
    delta_theta: float
    delta_phi: float
    bars: list[DensityBar]

    @computed_field
    @property
    def delta_deg(self) -> dict[str, float]:
        return {"theta": math.degrees(self.delta_theta), "phi": math.degrees(self.delta_phi)}


class TomographyRun(BaseModel):
    """Fits, reconstructions and failures of one tomography run."""

    fits: dict[str, SineFit]
    results: dict[str, TomographyResult] = Field(default_factory=dict)
    reports: dict[str, TomographyReport] = Field(default_factory=dict)
    errors: dict[str, str] = Field(default_factory=dict)


# Analysis
class SweepSpec(BaseModel):
    """Error-sensitivity sweep over the polar angle."""

    model_config = ConfigDict(extra="forbid")

    method: Literal["RAQST", "RPQST"] = "RAQST"
    perturbed_quantity: Literal["amplitude", "phase"] = "amplitude"
    relative_error: float = Field(0.01, ge=0.0)
    theta_grid: list[float] = Field(default_factory=lambda: [float(t) for t in range(5, 180, 5)])
    phi: float = 30.0  # degrees
    perturbation_mode: Literal["worst-case-sign", "both-signs"] = "worst-case-sign"

    @field_validator("theta_grid")
    @classmethod
    def _check_theta_grid(cls, grid: list[float]) -> list[float]:
        if not grid:
            raise ValueError("theta grid is empty")
        if any(not 0.0 < t < 180.0 for t in grid):
            raise ValueError("theta grid must lie inside (0, 180) degrees")
        return grid


class SweepResult(BaseModel):
    """Fidelity versus polar angle for one perturbation."""

    theta_deg: list[float]
    fidelity: list[Optional[float]]
    fidelity_plus: list[Optional[float]]
    fidelity_minus: list[Optional[float]]
    flags: list[list[str]]
    spec: SweepSpec


class FidelityStats(BaseModel):
    mean: Optional[float]
    median: Optional[float]
    min: Optional[float]
    max: Optional[float]
    count: int
    failures: int


class MonteCarloRecord(BaseModel):
    index: int
    theta: float
    phi: float
    fidelity: dict[str, Optional[float]]
    flags: dict[str, list[str]] = Field(default_factory=dict)


class MonteCarloResult(BaseModel):
    stats: dict[str, FidelityStats]
    records: list[MonteCarloRecord]
    config: dict


class OctantRow(BaseModel):
    label: str
    path: Literal["electron", "nuclear"]
    theta_deg: float
    phi_deg: float
    method: Method
    fidelity: Optional[float]
    signs_match: Optional[bool]
    passed: bool
