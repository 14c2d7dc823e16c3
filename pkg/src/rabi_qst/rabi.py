"""Rabi pulse sequences: trace synthesis, readout and register initialisation."""

import math
from functools import lru_cache
from typing import Literal, Optional

import numpy as np
from pydantic import ValidationError

from rabi_qst.errors import ConfigError, DimensionMismatchError
from rabi_qst.gates import (
    HYBRID_DIM,
    U3Variant,
    apply,
    build_init_gates,
    build_v_gates,
    electron_populations,
    hybrid_ket,
    laser_reset,
    subspace_rotation,
    to_density,
)
from rabi_qst.models import BlochVector, RabiConfig, RabiTrace, StateAngles
from rabi_qst.spin import (
    angles_to_bloch,
    angles_to_density,
    bloch_to_density,
    density_to_bloch,
    validate_density_matrix,
)
from rabi_qst.utils import config, setup_logger

logger = setup_logger(__name__)

X_RABI_PHASE = 0.0
Y_RABI_PHASE = math.pi / 2

# Sign of the transverse component in the fitted phase:
#   x-Rabi  ψ = atan2(X_RABI_SIGN·n_y, n_z)
#   y-Rabi  ψ = atan2(Y_RABI_SIGN·n_x, n_z)
X_RABI_SIGN = -1.0
Y_RABI_SIGN = 1.0

TRACE_ORDER = ("ref", "x", "y")

TracePath = Literal["electron", "nuclear"]


# Configuration
def default_time_grid(
    points: int = config.DEFAULT_POINTS,
    periods: float = config.DEFAULT_PERIODS,
    rabi_frequency: float = config.DEFAULT_RABI_FREQUENCY,
) -> list[float]:
    """Evenly spaced grid starting at 0 and covering `periods` Rabi periods."""
    if rabi_frequency <= 0:
        raise ConfigError("Rabi frequency must be positive")
    span = periods * 2 * math.pi / rabi_frequency
    return np.linspace(0.0, span, points).tolist()


def make_config(
    axis_phase: float = X_RABI_PHASE,
    rabi_frequency: float = config.DEFAULT_RABI_FREQUENCY,
    time_grid: Optional[list[float]] = None,
    contrast: float = config.DEFAULT_CONTRAST,
    offset: float = config.DEFAULT_OFFSET,
    decay_time: Optional[float] = None,
    noise_sigma: float = 0.0,
    drift: float = 0.0,
    seed: int = 0,
    points: int = config.DEFAULT_POINTS,
    periods: float = config.DEFAULT_PERIODS,
) -> RabiConfig:
    """Build a validated RabiConfig, raising ConfigError on bad input."""
    try:
        if time_grid is None:
            time_grid = default_time_grid(points, periods, rabi_frequency)
        return RabiConfig(
            axis_phase=axis_phase,
            rabi_frequency=rabi_frequency,
            time_grid=list(time_grid),
            contrast=contrast,
            offset=offset,
            decay_time=decay_time,
            noise_sigma=noise_sigma,
            drift=drift,
            seed=seed,
        )
    except ValidationError as e:
        raise ConfigError(f"Invalid Rabi configuration: {e}") from e


def trace_rng(seed: int, trace_index: int) -> np.random.Generator:
    """Independent stream per (seed, trace index); serial and parallel runs agree."""
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(1, trace_index)))


# Signal model
def contrast_envelope(cfg: RabiConfig, sequence_position: int = 0) -> np.ndarray:
    """C(t) under linear drift; each earlier trace in the sequence costs one drift step."""
    t = np.asarray(cfg.time_grid)
    start = cfg.contrast * (1.0 - cfg.drift) ** sequence_position
    span = t[-1] - t[0]
    return start * (1.0 - cfg.drift * (t - t[0]) / span)


def synthesize_signal(
    p0: np.ndarray, cfg: RabiConfig, trace_index: int = 0, sequence_position: int = 0
) -> np.ndarray:
    """signal = O + C(t)·p(t) + noise, with p damped towards ½ when a decay time is set."""
    t = np.asarray(cfg.time_grid)
    p = np.asarray(p0, dtype=float)
    if cfg.decay_time is not None:
        p = 0.5 + (p - 0.5) * np.exp(-t / cfg.decay_time)
    signal = cfg.offset + contrast_envelope(cfg, sequence_position) * p
    if cfg.noise_sigma > 0:
        signal = signal + trace_rng(cfg.seed, trace_index).normal(0.0, cfg.noise_sigma, size=t.shape)
    return signal


def closed_form_signal(
    bloch: BlochVector,
    axis_phase: float,
    rabi_frequency: float,
    times,
    contrast: float = 1.0,
    offset: float = 0.0,
) -> np.ndarray:
    """Noiseless O + C·p₀(t) for a rotation about the equatorial axis at phase ζ."""
    t = np.asarray(times, dtype=float)
    transverse = math.cos(axis_phase) * bloch.ny - math.sin(axis_phase) * bloch.nx
    nz_t = bloch.nz * np.cos(rabi_frequency * t) + transverse * np.sin(rabi_frequency * t)
    return offset + contrast * 0.5 * (1.0 + nz_t)


@lru_cache(maxsize=64)
def _rotation_stack(axis_phase: float, rabi_frequency: float, times: tuple[float, ...]) -> np.ndarray:
    stack = np.stack(
        [subspace_rotation(0, 1, axis_phase, rabi_frequency * t, dim=2).matrix for t in times]
    )
    stack.flags.writeable = False
    return stack


def as_qubit_density(state) -> np.ndarray:
    """Accept StateAngles, BlochVector, a 2-dim ket or a 2×2 density matrix."""
    if isinstance(state, StateAngles):
        return angles_to_density(state)
    if isinstance(state, BlochVector):
        return bloch_to_density(state)
    rho = to_density(state)
    return validate_density_matrix(rho, dim=2)


def describe_state(state) -> dict:
    rho = as_qubit_density(state)
    v = density_to_bloch(rho)
    return {"bloch": v.model_dump()}


# Traces
def electron_rabi_trace(
    state,
    cfg: RabiConfig,
    label: str = "x",
    trace_index: int = 0,
    sequence_position: int = 0,
) -> RabiTrace:
    """Rabi trace of an electron qubit state, one rotation per time point."""
    rho = as_qubit_density(state)
    rotations = _rotation_stack(cfg.axis_phase, cfg.rabi_frequency, tuple(cfg.time_grid))
    evolved = rotations @ rho @ rotations.conj().transpose(0, 2, 1)
    p0 = np.real(evolved[:, 0, 0])

    signal = synthesize_signal(p0, cfg, trace_index, sequence_position)
    logger.debug(f"Electron trace {label!r}: {len(p0)} points, index {trace_index}")
    return RabiTrace(
        label=label,
        times=list(cfg.time_grid),
        signal=signal.tolist(),
        meta={
            "config": cfg.model_dump(),
            "path": "electron",
            "state": describe_state(rho),
            "trace_index": trace_index,
            "sequence_position": sequence_position,
        },
    )


def readout(state: np.ndarray, contrast: float = 1.0, offset: float = 0.0) -> float:
    """O + C·(m_S = 0 population summed over m_I)."""
    state = np.asarray(state)
    if state.shape[0] != HYBRID_DIM:
        raise DimensionMismatchError(f"readout needs a {HYBRID_DIM}-dim state, got {state.shape[0]}")
    return offset + contrast * electron_populations(state)[0]


def nuclear_sequence_states(prep: StateAngles, theta_r: float, zeta: float = 0.0) -> list[tuple[str, np.ndarray]]:
    """Kets after each step of the nuclear preparation and Rabi circuit."""
    gates = build_v_gates(prep.theta, prep.phi, theta_r, zeta)
    psi = hybrid_ket(0, 0)
    states = [("initial", psi)]
    for name in ("V1", "V2", "V3", "V4"):
        psi = apply(gates[name], psi)
        states.append((name, psi))
    return states


def nuclear_rabi_trace(
    prep: StateAngles,
    cfg: RabiConfig,
    label: str = "x",
    trace_index: int = 0,
    sequence_position: int = 0,
) -> RabiTrace:
    """Rabi trace of the nuclear qubit read through the electron, one circuit per time point."""
    p0 = np.array(
        [
            readout(nuclear_sequence_states(prep, cfg.rabi_frequency * t, cfg.axis_phase)[-1][1])
            for t in cfg.time_grid
        ]
    )
    signal = synthesize_signal(p0, cfg, trace_index, sequence_position)
    logger.debug(f"Nuclear trace {label!r}: {len(p0)} points, index {trace_index}")
    return RabiTrace(
        label=label,
        times=list(cfg.time_grid),
        signal=signal.tolist(),
        meta={
            "config": cfg.model_dump(),
            "path": "nuclear",
            "state": {"theta_deg": prep.theta_deg, "phi_deg": prep.phi_deg, "bloch": angles_to_bloch(prep).model_dump()},
            "trace_index": trace_index,
            "sequence_position": sequence_position,
        },
    )


def simulate_trace_set(
    prep: StateAngles,
    cfg: RabiConfig,
    path: TracePath = "electron",
    include_ref: bool = True,
    trace_index_base: int = 0,
) -> dict[str, RabiTrace]:
    """Reference, x-Rabi and y-Rabi traces measured in that order.

    The reference is taken on the |0⟩ eigenstate. cfg.axis_phase is
    overridden per trace; drift accumulates along the sequence.
    """
    reference = StateAngles(theta=0.0, phi=0.0)
    plan = [("ref", reference, X_RABI_PHASE), ("x", prep, X_RABI_PHASE), ("y", prep, Y_RABI_PHASE)]
    if not include_ref:
        plan = plan[1:]

    traces = {}
    for position, (label, angles, phase) in enumerate(plan):
        trace_cfg = cfg.model_copy(update={"axis_phase": phase})
        index = trace_index_base + TRACE_ORDER.index(label)
        if path == "electron":
            trace = electron_rabi_trace(angles, trace_cfg, label, index, position)
        elif path == "nuclear":
            trace = nuclear_rabi_trace(angles, trace_cfg, label, index, position)
        else:
            raise ConfigError(f"unknown path {path!r}")
        traces[label] = trace

    logger.info(
        f"Simulated {len(traces)} {path} traces for θ={prep.theta_deg:.4g}°, φ={prep.phi_deg:.4g}°"
    )
    return traces


# Initialisation
def init_sequence_snapshots(
    state: np.ndarray, u3_variant: U3Variant = "corrected", initial_pump: bool = True
) -> list[tuple[str, np.ndarray]]:
    """Density matrices after the optional pump and after each of U₁…U₅."""
    rho = validate_density_matrix(to_density(state), dim=HYBRID_DIM)
    snapshots = [("input", rho)]
    gates = build_init_gates(u3_variant)
    if initial_pump:
        gates = [laser_reset("pump"), *gates]
    for gate in gates:
        rho = apply(gate, rho)
        snapshots.append((gate.name, rho))
    return snapshots


def run_init_sequence(
    state: np.ndarray, u3_variant: U3Variant = "corrected", initial_pump: bool = True
) -> np.ndarray:
    """Drive a hybrid register towards |0,0⟩ and return the final density matrix."""
    rho = init_sequence_snapshots(state, u3_variant, initial_pump)[-1][1]
    target = hybrid_ket(0, 0)
    logger.info(f"Init sequence ({u3_variant}): ⟨0,0|ρ|0,0⟩ = {np.real(target.conj() @ rho @ target):.12f}")
    return rho
