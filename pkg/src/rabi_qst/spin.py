"""Qubit state representations, conversions between them, and fidelity.

Basis ordering: index 0 is |0⟩ (north pole, n_z = +1), index 1 is |1⟩.
A pure state is cos(θ/2)|0⟩ + e^{iφ} sin(θ/2)|1⟩ and its density matrix is
½(𝕀 + n_x σ_x + n_y σ_y + n_z σ_z).
"""

import math

import numpy as np

from rabi_qst.errors import DimensionMismatchError, DomainError, InvalidStateError
from rabi_qst.models import BlochVector, StateAngles, wrap_phase
from rabi_qst.utils import config

IDENTITY = np.eye(2, dtype=complex)
SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=complex)
PAULIS = (SIGMA_X, SIGMA_Y, SIGMA_Z)


# Matrix plumbing
def tensor(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Kronecker product a ⊗ b."""
    return np.kron(np.asarray(a), np.asarray(b))


def adjoint(a: np.ndarray) -> np.ndarray:
    return np.asarray(a).conj().T


def trace(a: np.ndarray) -> complex:
    a = np.asarray(a)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise DimensionMismatchError(f"trace needs a square matrix, got shape {a.shape}")
    return complex(np.trace(a))


def purity(rho: np.ndarray) -> float:
    """Tr(ρ²)."""
    rho = np.asarray(rho)
    return float(np.real(np.trace(rho @ rho)))


def apply_unitary(u: np.ndarray, state: np.ndarray) -> np.ndarray:
    """U|ψ⟩ for a ket, UρU† for a density matrix."""
    u = np.asarray(u, dtype=complex)
    state = np.asarray(state, dtype=complex)
    if u.shape[1] != state.shape[0]:
        raise DimensionMismatchError(
            f"operator of shape {u.shape} cannot act on state of dimension {state.shape[0]}"
        )
    if state.ndim == 1:
        return u @ state
    return u @ state @ adjoint(u)


def projector(ket: np.ndarray) -> np.ndarray:
    """|ψ⟩⟨ψ|."""
    ket = np.asarray(ket, dtype=complex)
    return np.outer(ket, ket.conj())


# Validation
def validate_pure_state(psi: np.ndarray) -> np.ndarray:
    psi = np.asarray(psi, dtype=complex)
    if psi.ndim != 1:
        raise InvalidStateError(f"pure state must be a vector, got shape {psi.shape}")
    if not np.all(np.isfinite(psi)):
        raise InvalidStateError("pure state has non-finite amplitudes")
    norm = np.linalg.norm(psi)
    if abs(norm - 1.0) > config.TOLERANCE:
        raise InvalidStateError(f"pure state norm is {norm!r}, expected 1")
    return psi


def validate_density_matrix(rho: np.ndarray, dim: int | None = None) -> np.ndarray:
    """Check Hermiticity, unit trace and positivity; return ρ as a complex array."""
    rho = np.asarray(rho, dtype=complex)
    if rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
        raise InvalidStateError(f"density matrix must be square, got shape {rho.shape}")
    if dim is not None and rho.shape[0] != dim:
        raise DimensionMismatchError(f"expected a {dim}x{dim} density matrix, got {rho.shape}")
    if not np.all(np.isfinite(rho)):
        raise InvalidStateError("density matrix has non-finite entries")
    if np.max(np.abs(rho - adjoint(rho))) > config.TOLERANCE:
        raise InvalidStateError("density matrix is not Hermitian")
    tr = np.trace(rho)
    if abs(tr - 1.0) > config.TOLERANCE:
        raise InvalidStateError(f"density matrix trace is {tr!r}, expected 1")
    if np.min(np.linalg.eigvalsh(rho)) < -config.EIGEN_TOLERANCE:
        raise InvalidStateError("density matrix has negative eigenvalues")
    return rho


# Conversions
def angles_to_ket(angles: StateAngles) -> np.ndarray:
    half = angles.theta / 2
    return np.array([math.cos(half), np.exp(1j * angles.phi) * math.sin(half)], dtype=complex)


def angles_to_density(angles: StateAngles) -> np.ndarray:
    return projector(angles_to_ket(angles))


def bloch_to_density(v: BlochVector) -> np.ndarray:
    if v.norm > 1.0 + config.NORM_TOLERANCE:
        raise InvalidStateError(f"Bloch vector norm {v.norm!r} exceeds 1")
    return 0.5 * (IDENTITY + v.nx * SIGMA_X + v.ny * SIGMA_Y + v.nz * SIGMA_Z)


def density_to_bloch(rho: np.ndarray, dim: int = 2) -> BlochVector:
    """n_i = Tr(ρ σ_i)."""
    if dim != 2:
        raise DimensionMismatchError(f"Bloch vectors exist for qubits only, got dim={dim}")
    rho = validate_density_matrix(rho, dim=2)
    return BlochVector.from_array(np.real([np.trace(rho @ s) for s in PAULIS]))


def angles_to_bloch(angles: StateAngles) -> BlochVector:
    st = math.sin(angles.theta)
    return BlochVector(
        nx=st * math.cos(angles.phi),
        ny=st * math.sin(angles.phi),
        nz=math.cos(angles.theta),
    )


def bloch_to_angles(v: BlochVector) -> StateAngles:
    """Inverse of angles_to_bloch for unit vectors.

    At the poles phi is returned as 0 with phi_undefined set.
    """
    if abs(v.norm - 1.0) > config.PURE_TOLERANCE:
        raise DomainError(f"angles are defined for unit Bloch vectors only, |n| = {v.norm!r}")
    r_xy = math.hypot(v.nx, v.ny)
    theta = min(max(math.atan2(r_xy, v.nz), 0.0), math.pi)
    if r_xy <= config.NORM_TOLERANCE:
        return StateAngles(theta=0.0 if v.nz > 0 else math.pi, phi=0.0, phi_undefined=True)
    return StateAngles(theta=theta, phi=wrap_phase(math.atan2(v.ny, v.nx)))


def normalized(v: BlochVector) -> BlochVector:
    norm = v.norm
    if norm == 0.0:
        raise InvalidStateError("cannot normalise a zero Bloch vector")
    return BlochVector.from_array(v.as_array() / norm)


# Printed parametrisation, kept to document where it departs from the ket form
def theta_literal(v: BlochVector) -> float:
    """θ = atan(√(n_x²+n_y²)/n_z) + π/2 as printed; equals the true θ ± π/2."""
    r_xy = math.hypot(v.nx, v.ny)
    if v.nz == 0.0:
        return math.pi / 2 + math.copysign(math.pi / 2, r_xy)
    return math.atan(r_xy / v.nz) + math.pi / 2


def phi_literal(v: BlochVector) -> float:
    """φ = π − atan(n_x/n_y) − sgn(n_y)·π/2 as printed; singular at n_y = 0."""
    if v.ny == 0.0:
        raise DomainError("printed azimuth formula is singular at n_y = 0")
    return math.pi - math.atan(v.nx / v.ny) - math.copysign(math.pi / 2, v.ny)


# Fidelity
def fidelity(rho_th: np.ndarray, rho_exp: np.ndarray) -> float:
    """F = Tr(ρ_th ρ_exp) / √(Tr(ρ_th²) Tr(ρ_exp²))."""
    rho_th = np.asarray(rho_th, dtype=complex)
    rho_exp = np.asarray(rho_exp, dtype=complex)
    if rho_th.shape != rho_exp.shape:
        raise DimensionMismatchError(f"cannot compare states of shapes {rho_th.shape} and {rho_exp.shape}")
    rho_th = validate_density_matrix(rho_th)
    rho_exp = validate_density_matrix(rho_exp)
    overlap = float(np.real(np.trace(rho_th @ rho_exp)))
    value = overlap / math.sqrt(purity(rho_th) * purity(rho_exp))
    return min(max(value, 0.0), 1.0)
