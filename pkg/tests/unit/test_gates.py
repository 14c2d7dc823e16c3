"""Tests for hybrid-register gates."""

import math

import numpy as np
import pytest
from rabi_qst.errors import DimensionMismatchError, InvalidStateError, RepresentationError
from rabi_qst.gates import (
    HYBRID_DIM,
    apply,
    build_init_gates,
    build_v_gates,
    electron_populations,
    hybrid_index,
    hybrid_ket,
    laser_reset,
    nuclear_qubit_density,
    subspace_rotation,
)
from rabi_qst.models import StateAngles
from rabi_qst.spin import PAULIS, adjoint, angles_to_density, projector, validate_density_matrix


def test_hybrid_index_layout():
    """Test m_S is the slow index and m_I the fast one."""
    assert hybrid_index(1, 1) == 0
    assert hybrid_index(0, 0) == 4
    assert hybrid_index(-1, 1) == 6
    assert hybrid_index(-1, 0) == 7
    assert hybrid_index(-1, -1) == 8
    with pytest.raises(ValueError):
        hybrid_index(2, 0)


def test_subspace_rotation_pi_pulse():
    """Test a π rotation about x takes |0⟩ to −i|1⟩."""
    gate = subspace_rotation(0, 1, 0.0, math.pi, dim=2)
    assert np.allclose(gate.matrix @ [1, 0], [0, -1j], atol=1e-15)
    assert gate.unitarity_error() < 1e-12


def test_subspace_rotation_embeds_identity():
    """Test levels outside the span are untouched."""
    gate = subspace_rotation(2, 5, 0.3, 1.1)
    untouched = [i for i in range(HYBRID_DIM) if i not in (2, 5)]
    assert np.allclose(gate.matrix[np.ix_(untouched, untouched)], np.eye(len(untouched)))


def test_subspace_rotation_rejects_equal_levels():
    """Test equal levels raise."""
    with pytest.raises(ValueError):
        subspace_rotation(3, 3, 0.0, 1.0)


def test_init_gates_structure():
    """Test U1-U4 are unitary and U5 is a trace-preserving channel."""
    gates = build_init_gates()
    assert [g.name for g in gates] == ["U1", "U2", "U3", "U4", "U5"]
    for gate in gates[:4]:
        assert gate.kind == "unitary"
        assert gate.unitarity_error() < 1e-12
    assert gates[4].kind == "channel"
    assert gates[4].unitarity_error() < 1e-12


def test_init_gate_actions():
    """Test each conditional swap on the levels it targets."""
    u1, u2, u3, u4, _ = build_init_gates()
    assert np.allclose(apply(u1, hybrid_ket(0, -1)), hybrid_ket(1, -1))
    assert np.allclose(apply(u1, hybrid_ket(0, 0)), hybrid_ket(0, 0))
    assert np.allclose(apply(u2, hybrid_ket(0, 1)), hybrid_ket(-1, 1))
    assert np.allclose(apply(u3, hybrid_ket(1, -1)), hybrid_ket(1, 0))
    assert np.allclose(apply(u3, hybrid_ket(0, 0)), hybrid_ket(0, 0))
    assert np.allclose(apply(u4, hybrid_ket(-1, 1)), hybrid_ket(-1, 0))


def test_literal_u3_is_operator():
    """Test the literal U3 renormalises and can annihilate states."""
    u3 = build_init_gates("literal")[2]
    assert u3.kind == "operator"
    assert u3.unitarity_error() > 0.5
    assert np.allclose(apply(u3, hybrid_ket(-1, 1)), hybrid_ket(-1, 1))
    with pytest.raises(InvalidStateError):
        apply(u3, hybrid_ket(0, 0))


def test_unknown_u3_variant():
    """Test an unknown variant name raises."""
    with pytest.raises(ValueError):
        build_init_gates("printed")


def test_laser_reset_channel():
    """Test the reset pumps the electron to m_S = 0 keeping the nucleus."""
    reset = laser_reset()
    rho = apply(reset, hybrid_ket(-1, 1))
    assert rho.shape == (HYBRID_DIM, HYBRID_DIM)
    idx = hybrid_index(0, 1)
    assert rho[idx, idx] == pytest.approx(1.0)
    assert np.trace(rho) == pytest.approx(1.0, abs=1e-12)


def test_channel_refuses_pure_representation():
    """Test keep_pure with a channel raises."""
    with pytest.raises(RepresentationError):
        apply(laser_reset(), hybrid_ket(0, 0), keep_pure=True)


def test_apply_dimension_mismatch():
    """Test a 2-dim state cannot pass through a 9-dim gate."""
    with pytest.raises(DimensionMismatchError):
        apply(build_init_gates()[0], np.array([1, 0], dtype=complex))


def test_v_gates_are_unitary():
    """Test V1-V4 unitarity."""
    gates = build_v_gates(1.0, 2.0, 0.7, zeta=math.pi / 2)
    assert set(gates) == {"V1", "V2", "V3", "V4"}
    for gate in gates.values():
        assert gate.unitarity_error() < 1e-12


def test_v1_flips_electron_on_nuclear_zero():
    """Test V1 maps |0,0⟩ to |−1,0⟩ and leaves |0,1⟩ alone."""
    v1 = build_v_gates(0.0, 0.0, 0.0)["V1"]
    assert np.allclose(apply(v1, hybrid_ket(0, 0)), hybrid_ket(-1, 0))
    assert np.allclose(apply(v1, hybrid_ket(0, 1)), hybrid_ket(0, 1))


def test_v2_prepares_nuclear_state():
    """Test V2|−1,0⟩ = cos(θ/2)|−1,0⟩ + e^{iφ} sin(θ/2)|−1,1⟩."""
    angles = StateAngles.from_degrees(58, 249)
    v2 = build_v_gates(angles.theta, angles.phi, 0.0)["V2"]
    psi = apply(v2, hybrid_ket(-1, 0))
    expected = math.cos(angles.theta / 2) * hybrid_ket(-1, 0) + np.exp(1j * angles.phi) * math.sin(
        angles.theta / 2
    ) * hybrid_ket(-1, 1)
    assert np.max(np.abs(psi - expected)) < 1e-12
    assert np.max(np.abs(nuclear_qubit_density(psi) - angles_to_density(angles))) < 1e-12


def test_subspace_rotation_matches_eigendecomposition():
    """Test the embedded block equals V exp(−iθΛ) V† from eigh of the generator."""
    rng = np.random.default_rng(17)
    a, b = hybrid_index(-1, 0), hybrid_index(-1, 1)
    for phase_phi, angle in zip(rng.uniform(0, 2 * math.pi, 100), rng.uniform(-2 * math.pi, 2 * math.pi, 100)):
        generator = 0.5 * (math.cos(phase_phi) * PAULIS[0] + math.sin(phase_phi) * PAULIS[1])
        eigenvalues, vectors = np.linalg.eigh(generator)
        block = vectors @ np.diag(np.exp(-1j * angle * eigenvalues)) @ adjoint(vectors)
        expected = np.eye(HYBRID_DIM, dtype=complex)
        expected[np.ix_([a, b], [a, b])] = block
        gate = subspace_rotation(a, b, float(phase_phi), float(angle))
        assert np.max(np.abs(gate.matrix - expected)) < 1e-12


def test_subspace_rotation_full_turns():
    """Test angle 0 is 𝕀₉ and angle 2π is −1 on the span only."""
    a, b = hybrid_index(-1, 0), hybrid_index(-1, 1)
    assert np.max(np.abs(subspace_rotation(a, b, 0.8, 0.0).matrix - np.eye(HYBRID_DIM))) < 1e-15

    expected = np.eye(HYBRID_DIM, dtype=complex)
    expected[a, a] = expected[b, b] = -1
    assert np.max(np.abs(subspace_rotation(a, b, 0.8, 2 * math.pi).matrix - expected)) < 1e-12


def test_v2_prepares_nuclear_state_on_grid():
    """Test V2|−1,0⟩ over a 10×10 grid of polar and azimuthal angles."""
    for theta in np.linspace(0, math.pi, 10):
        for phi in np.linspace(0, 2 * math.pi, 10, endpoint=False):
            psi = apply(build_v_gates(float(theta), float(phi), 0.0)["V2"], hybrid_ket(-1, 0))
            expected = math.cos(theta / 2) * hybrid_ket(-1, 0)
            expected = expected + np.exp(1j * phi) * math.sin(theta / 2) * hybrid_ket(-1, 1)
            assert np.max(np.abs(psi - expected)) < 1e-12


def test_laser_reset_on_mixture():
    """Test U5 sends ½(|1,1⟩⟨1,1| + |−1,0⟩⟨−1,0|) to ½(|0,1⟩⟨0,1| + |0,0⟩⟨0,0|)."""
    reset = build_init_gates()[4]
    rho = (projector(hybrid_ket(1, 1)) + projector(hybrid_ket(-1, 0))) / 2
    expected = (projector(hybrid_ket(0, 1)) + projector(hybrid_ket(0, 0))) / 2
    assert np.max(np.abs(apply(reset, rho) - expected)) < 1e-15


def test_laser_reset_keeps_density_matrices_valid():
    """Test U5 maps random register states to valid density matrices."""
    rng = np.random.default_rng(23)
    reset = laser_reset()
    for _ in range(20):
        a = rng.normal(size=(HYBRID_DIM, HYBRID_DIM)) + 1j * rng.normal(size=(HYBRID_DIM, HYBRID_DIM))
        rho = a @ adjoint(a)
        rho /= np.trace(rho)
        out = validate_density_matrix(apply(reset, rho), dim=HYBRID_DIM)
        assert abs(np.trace(out) - 1) < 1e-12
        assert electron_populations(out)[0] == pytest.approx(1.0, abs=1e-12)
