"""Tests for Rabi trace synthesis, readout and initialisation."""

import math

import numpy as np
import pytest
from rabi_qst.errors import ConfigError, DimensionMismatchError
from rabi_qst.gates import HYBRID_DIM, hybrid_index, hybrid_ket
from rabi_qst.models import StateAngles
from rabi_qst.rabi import (
    X_RABI_PHASE,
    Y_RABI_PHASE,
    closed_form_signal,
    electron_rabi_trace,
    init_sequence_snapshots,
    make_config,
    nuclear_rabi_trace,
    nuclear_sequence_states,
    readout,
    run_init_sequence,
    simulate_trace_set,
)
from rabi_qst.spin import angles_to_bloch, angles_to_density


def unit_config(**kwargs):
    """Contrast 1, offset 0, noiseless unless overridden."""
    return make_config(contrast=1.0, offset=0.0, **kwargs)


def test_make_config_rejects_bad_values():
    """Test invalid parameters raise ConfigError."""
    with pytest.raises(ConfigError):
        make_config(contrast=0.0)
    with pytest.raises(ConfigError):
        make_config(points=5)
    with pytest.raises(ConfigError):
        make_config(time_grid=[0, 1, 1, 2, 3, 4, 5, 6])
    with pytest.raises(ConfigError):
        make_config(noise_sigma=-0.1)


def test_default_grid():
    """Test 61 points over three periods."""
    cfg = make_config()
    assert len(cfg.time_grid) == 61
    assert cfg.time_grid[-1] * cfg.rabi_frequency == pytest.approx(6 * math.pi)


def test_reference_trace_is_cosine_squared():
    """Test |0⟩ under x-Rabi gives cos²(Ωt/2)."""
    cfg = unit_config()
    trace = electron_rabi_trace(StateAngles(theta=0.0), cfg)
    expected = np.cos(cfg.rabi_frequency * trace.t / 2) ** 2
    assert np.max(np.abs(trace.y - expected)) < 1e-12


def test_state_on_rotation_axis_is_flat():
    """Test n = (1, 0, 0) does not oscillate under x-Rabi."""
    trace = electron_rabi_trace(StateAngles.from_degrees(90, 0), unit_config())
    assert np.ptp(trace.y) < 1e-12


def test_gate_simulation_matches_closed_form():
    """Test per-point rotation against the closed form for random states."""
    rng = np.random.default_rng(5)
    for _ in range(50):
        angles = StateAngles(theta=float(np.arccos(rng.uniform(-1, 1))), phi=float(rng.uniform(0, 2 * math.pi)))
        for phase in (X_RABI_PHASE, Y_RABI_PHASE):
            cfg = make_config(axis_phase=phase)
            trace = electron_rabi_trace(angles, cfg)
            expected = closed_form_signal(
                angles_to_bloch(angles), phase, cfg.rabi_frequency, cfg.time_grid, cfg.contrast, cfg.offset
            )
            assert np.max(np.abs(trace.y - expected)) < 1e-10


def test_electron_trace_accepts_density_matrix():
    """Test a density matrix input gives the same trace as angles."""
    angles = StateAngles.from_degrees(58, 249)
    cfg = make_config()
    a = electron_rabi_trace(angles, cfg)
    b = electron_rabi_trace(angles_to_density(angles), cfg)
    assert np.max(np.abs(a.y - b.y)) < 1e-15


def test_noise_is_seeded():
    """Test identical seeds give identical traces and different seeds differ."""
    angles = StateAngles.from_degrees(40, 10)
    a = electron_rabi_trace(angles, make_config(noise_sigma=0.01, seed=3))
    b = electron_rabi_trace(angles, make_config(noise_sigma=0.01, seed=3))
    c = electron_rabi_trace(angles, make_config(noise_sigma=0.01, seed=4))
    assert a.signal == b.signal
    assert a.signal != c.signal


def test_trace_set_streams_depend_on_index_only():
    """Test a state's traces do not depend on what was simulated before."""
    angles = StateAngles.from_degrees(120, 200)
    cfg = make_config(noise_sigma=0.01, seed=9)
    first = simulate_trace_set(angles, cfg, trace_index_base=6)
    second = simulate_trace_set(angles, cfg, trace_index_base=6)
    other = simulate_trace_set(angles, cfg, trace_index_base=9)
    assert first["x"].signal == second["x"].signal
    assert first["x"].signal != other["x"].signal
    assert list(first) == ["ref", "x", "y"]


def test_decay_damps_towards_half():
    """Test the decayed population tends to ½."""
    cfg = unit_config(decay_time=0.1, points=61, periods=3)
    trace = electron_rabi_trace(StateAngles(theta=0.0), cfg)
    assert trace.y[-1] == pytest.approx(0.5, abs=1e-6)


def test_drift_lowers_later_contrast():
    """Test drift shrinks the oscillation of later traces in the sequence."""
    cfg = make_config(drift=0.05)
    traces = simulate_trace_set(StateAngles(theta=0.0), cfg)
    assert np.ptp(traces["ref"].y) > np.ptp(traces["x"].y)


def test_readout_examples():
    """Test readout of basis states and an equal superposition."""
    assert readout(hybrid_ket(0, 0)) == pytest.approx(1.0)
    assert readout(hybrid_ket(-1, 1)) == pytest.approx(0.0)
    final = nuclear_sequence_states(StateAngles.from_degrees(90, 0), theta_r=0.0)[-1][1]
    assert readout(final) == pytest.approx(0.5, abs=1e-12)
    assert readout(hybrid_ket(0, 1), contrast=0.3, offset=0.7) == pytest.approx(1.0)
    with pytest.raises(DimensionMismatchError):
        readout(np.array([1, 0], dtype=complex))


def test_nuclear_trace_of_basis_states():
    """Test nuclear |0⟩ and |1⟩ give cos² and sin² oscillations."""
    cfg = make_config()
    up = nuclear_rabi_trace(StateAngles(theta=0.0), cfg)
    down = nuclear_rabi_trace(StateAngles(theta=math.pi), cfg)
    half_angle = cfg.rabi_frequency * up.t / 2
    assert np.max(np.abs(up.y - (cfg.offset + cfg.contrast * np.cos(half_angle) ** 2))) < 1e-12
    assert np.max(np.abs(down.y - (cfg.offset + cfg.contrast * np.sin(half_angle) ** 2))) < 1e-12


def test_nuclear_trace_matches_electron_trace():
    """Test the nuclear circuit reads out like the electron qubit."""
    angles = StateAngles.from_degrees(58, 249)
    for phase in (X_RABI_PHASE, Y_RABI_PHASE):
        cfg = make_config(axis_phase=phase)
        nuclear = nuclear_rabi_trace(angles, cfg)
        electron = electron_rabi_trace(angles, cfg)
        assert np.max(np.abs(nuclear.y - electron.y)) < 1e-10


def test_nuclear_trace_is_periodic():
    """Test the noiseless nuclear trace repeats after one period."""
    angles = StateAngles.from_degrees(137, 53)
    period = 2 * math.pi / make_config().rabi_frequency
    grid = np.linspace(0, period, 21).tolist()
    cfg = make_config(time_grid=grid)
    trace = nuclear_rabi_trace(angles, cfg)
    shifted = nuclear_rabi_trace(angles, make_config(time_grid=[t + period for t in grid]))
    assert np.max(np.abs(trace.y - shifted.y)) < 1e-10


def test_init_sequence_keeps_initialised_state():
    """Test |0,0⟩ stays |0,0⟩."""
    rho = run_init_sequence(hybrid_ket(0, 0))
    idx = hybrid_index(0, 0)
    assert rho[idx, idx].real == pytest.approx(1.0, abs=1e-12)


@pytest.mark.parametrize("variant", ["corrected", "literal"])
def test_init_sequence_from_maximally_mixed(variant):
    """Test the pumped sequence initialises any input in both variants."""
    rho = run_init_sequence(np.eye(HYBRID_DIM) / HYBRID_DIM, u3_variant=variant)
    idx = hybrid_index(0, 0)
    assert rho[idx, idx].real == pytest.approx(1.0, abs=1e-12)
    assert np.trace(rho).real == pytest.approx(1.0, abs=1e-12)


@pytest.mark.parametrize("variant", ["corrected", "literal"])
def test_init_sequence_without_pump(variant):
    """Test without the initial pump a mixed input only reaches 1/3."""
    rho = run_init_sequence(np.eye(HYBRID_DIM) / HYBRID_DIM, u3_variant=variant, initial_pump=False)
    idx = hybrid_index(0, 0)
    assert rho[idx, idx].real == pytest.approx(1 / 3, abs=1e-12)


@pytest.mark.parametrize("variant", ["corrected", "literal"])
def test_init_sequence_preserves_trace(variant):
    """Test trace preservation for |1,−1⟩."""
    snapshots = init_sequence_snapshots(hybrid_ket(1, -1), u3_variant=variant)
    assert [name for name, _ in snapshots] == ["input", "pump", "U1", "U2", "U3", "U4", "U5"]
    for _, rho in snapshots:
        assert abs(np.trace(rho) - 1) < 1e-12
