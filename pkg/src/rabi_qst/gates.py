"""Gates on the electron⊗nuclear hybrid register of an NV centre.

Basis |m_S, m_I⟩ with m_S the slow index and m_I the fast index, both ordered
(+1, 0, −1):

    index(m_S, m_I) = 3·(1 − m_S) + (1 − m_I)

so |1,1⟩ = 0, |0,0⟩ = 4, |−1,1⟩ = 6, |−1,0⟩ = 7, |−1,−1⟩ = 8.
"""

import math
from typing import Literal, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict
from scipy.linalg import expm

from rabi_qst.errors import DimensionMismatchError, InvalidStateError, RepresentationError
from rabi_qst.spin import PAULIS, adjoint, apply_unitary, projector, validate_density_matrix
from rabi_qst.utils import config, setup_logger

logger = setup_logger(__name__)

SPIN1_LEVELS = (1, 0, -1)
HYBRID_DIM = 9
I3 = np.eye(3, dtype=complex)

# V₂ is driven 90° ahead of φ so that V₂|−1,0⟩ = cos(θ/2)|−1,0⟩ + e^{iφ} sin(θ/2)|−1,1⟩
PREP_PHASE_OFFSET = math.pi / 2

U3Variant = Literal["corrected", "literal"]


def level_position(m: int) -> int:
    if m not in SPIN1_LEVELS:
        raise ValueError(f"spin-1 projection must be one of {SPIN1_LEVELS}, got {m}")
    return 1 - m


def hybrid_index(m_s: int, m_i: int) -> int:
    return 3 * level_position(m_s) + level_position(m_i)


HYBRID_LABELS = tuple(f"|{m_s},{m_i}⟩" for m_s in SPIN1_LEVELS for m_i in SPIN1_LEVELS)

# The nuclear qubit lives in the m_S = −1 manifold: qubit |0⟩ ↔ |−1,0⟩, qubit |1⟩ ↔ |−1,1⟩
NUCLEAR_QUBIT_LEVELS = (hybrid_index(-1, 0), hybrid_index(-1, 1))


def hybrid_ket(m_s: int, m_i: int) -> np.ndarray:
    ket = np.zeros(HYBRID_DIM, dtype=complex)
    ket[hybrid_index(m_s, m_i)] = 1.0
    return ket


def spin1_outer(a: int, b: int) -> np.ndarray:
    """|a⟩⟨b| on a single spin-1."""
    op = np.zeros((3, 3), dtype=complex)
    op[level_position(a), level_position(b)] = 1.0
    return op


class GateOp(BaseModel):
    """A unitary, a CPTP channel (Kraus list) or a general linear operator."""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    name: str
    kind: Literal["unitary", "channel", "operator"]
    matrix: Optional[np.ndarray] = None
    kraus: tuple[np.ndarray, ...] = ()

    @property
    def dim(self) -> int:
        if self.kind == "channel":
            return self.kraus[0].shape[0]
        return self.matrix.shape[0]

    def unitarity_error(self) -> float:
        """max|U†U − 𝕀| for unitaries and operators, max|ΣK†K − 𝕀| for channels."""
        if self.kind == "channel":
            total = sum(adjoint(k) @ k for k in self.kraus)
        else:
            total = adjoint(self.matrix) @ self.matrix
        return float(np.max(np.abs(total - np.eye(self.dim))))

    def to_json_dict(self) -> dict:
        """Debug dump; not a stable format."""
        matrices = list(self.kraus) if self.kind == "channel" else [self.matrix]
        return {
            "name": self.name,
            "kind": self.kind,
            "matrices": [{"re": m.real.tolist(), "im": m.imag.tolist()} for m in matrices],
        }


def unitary_gate(name: str, matrix: np.ndarray) -> GateOp:
    gate = GateOp(name=name, kind="unitary", matrix=np.asarray(matrix, dtype=complex))
    error = gate.unitarity_error()
    if error > config.TOLERANCE:
        raise InvalidStateError(f"{name} is not unitary (max deviation {error:.3g})")
    return gate


# Generic rotations
def subspace_rotation(
    level_a: int,
    level_b: int,
    phase_phi: float,
    angle: float,
    dim: int = HYBRID_DIM,
    name: str = "R",
) -> GateOp:
    """exp(−i·angle·I_φ) on span{a, b}, identity elsewhere.

    I_φ = cos φ I_x + sin φ I_y with I = σ/2 and |a⟩ playing the role of |0⟩.
    """
    if level_a == level_b:
        raise ValueError("rotation levels must differ")
    for level in (level_a, level_b):
        if not 0 <= level < dim:
            raise ValueError(f"level {level} outside a {dim}-dimensional space")

    generator = 0.5 * (math.cos(phase_phi) * PAULIS[0] + math.sin(phase_phi) * PAULIS[1])
    block = expm(-1j * angle * generator)

    matrix = np.eye(dim, dtype=complex)
    idx = [level_a, level_b]
    matrix[np.ix_(idx, idx)] = block
    return GateOp(name=name, kind="unitary", matrix=matrix)


def laser_reset(name: str = "U5") -> GateOp:
    """Optical pumping of the electron to m_S = 0, nuclear state untouched.

    Kraus set {|0⟩⟨k| ⊗ 𝕀₃ : k ∈ {1, 0, −1}}.
    """
    kraus = tuple(np.kron(spin1_outer(0, k), I3) for k in SPIN1_LEVELS)
    return GateOp(name=name, kind="channel", kraus=kraus)


def electron_swap_on_nucleus(a: int, b: int, nuclear: int) -> np.ndarray:
    """Swap electron levels a↔b when the nucleus is in m_I = nuclear."""
    spectator = next(m for m in SPIN1_LEVELS if m not in (a, b))
    flip = spin1_outer(a, b) + spin1_outer(b, a) + spin1_outer(spectator, spectator)
    matrix = np.kron(flip, spin1_outer(nuclear, nuclear))
    for m in SPIN1_LEVELS:
        if m != nuclear:
            matrix = matrix + np.kron(I3, spin1_outer(m, m))
    return matrix


def nuclear_swap_on_electron(a: int, b: int, electron: int) -> np.ndarray:
    """Swap nuclear levels a↔b when the electron is in m_S = electron."""
    spectator = next(m for m in SPIN1_LEVELS if m not in (a, b))
    flip = spin1_outer(a, b) + spin1_outer(b, a) + spin1_outer(spectator, spectator)
    matrix = np.kron(spin1_outer(electron, electron), flip)
    for m in SPIN1_LEVELS:
        if m != electron:
            matrix = matrix + np.kron(spin1_outer(m, m), I3)
    return matrix


# Circuits
def build_init_gates(u3_variant: U3Variant = "corrected") -> list[GateOp]:
    """U₁…U₅ of the |0,0⟩ initialisation circuit.

    U₁, U₂ are MW swaps of the electron conditioned on the nucleus, U₃, U₄ RF
    swaps of the nucleus conditioned on the electron, U₅ the laser reset.
    The printed U₃ repeats |−1⟩⟨−1|⊗𝕀₃ where |0⟩⟨0|⊗𝕀₃ belongs; "literal"
    keeps the printed sum as a non-unitary operator.
    """
    u1 = unitary_gate("U1", electron_swap_on_nucleus(1, 0, nuclear=-1))
    u2 = unitary_gate("U2", electron_swap_on_nucleus(-1, 0, nuclear=1))

    swap = spin1_outer(0, -1) + spin1_outer(-1, 0) + spin1_outer(1, 1)
    if u3_variant == "corrected":
        u3 = unitary_gate("U3", nuclear_swap_on_electron(0, -1, electron=1))
    elif u3_variant == "literal":
        literal = 2 * np.kron(spin1_outer(-1, -1), I3) + np.kron(spin1_outer(1, 1), swap)
        u3 = GateOp(name="U3", kind="operator", matrix=literal)
    else:
        raise ValueError(f"unknown U3 variant {u3_variant!r}")

    u4 = unitary_gate("U4", nuclear_swap_on_electron(0, 1, electron=-1))
    return [u1, u2, u3, u4, laser_reset("U5")]


def build_v_gates(theta: float, phi: float, theta_r: float, zeta: float = 0.0) -> dict[str, GateOp]:
    """V₁…V₄ of the nuclear preparation and Rabi circuit.

    V₁, V₄ flip the electron |0⟩↔|−1⟩ conditioned on nuclear |0⟩; V₂ prepares
    the nuclear state (θ, φ) in the m_S = −1 manifold; V₃ is the nuclear
    Rabi rotation by θ_R about the axis at phase ζ.
    """
    a, b = NUCLEAR_QUBIT_LEVELS
    cnot = electron_swap_on_nucleus(0, -1, nuclear=0)
    return {
        "V1": unitary_gate("V1", cnot),
        "V2": subspace_rotation(a, b, phi + PREP_PHASE_OFFSET, theta, name="V2"),
        "V3": subspace_rotation(a, b, zeta, theta_r, name="V3"),
        "V4": unitary_gate("V4", cnot),
    }


# State handling
def to_density(state: np.ndarray) -> np.ndarray:
    state = np.asarray(state, dtype=complex)
    return projector(state) if state.ndim == 1 else state


def apply(gate: GateOp, state: np.ndarray, keep_pure: bool = False) -> np.ndarray:
    """Apply a gate to a ket or density matrix.

    Channels promote kets to density matrices. Operators (non-unitary) are
    followed by renormalisation; the discarded weight is logged.
    """
    state = np.asarray(state, dtype=complex)
    if state.shape[0] != gate.dim:
        raise DimensionMismatchError(f"{gate.name} acts on dimension {gate.dim}, state has {state.shape[0]}")

    if gate.kind == "unitary":
        return apply_unitary(gate.matrix, state)

    if gate.kind == "channel":
        if keep_pure:
            raise RepresentationError(f"{gate.name} is a channel; the result is not a pure state")
        rho = to_density(state)
        return sum(k @ rho @ adjoint(k) for k in gate.kraus)

    out = apply_unitary(gate.matrix, state)
    weight = float(np.linalg.norm(out) ** 2) if out.ndim == 1 else float(np.real(np.trace(out)))
    if weight < config.TOLERANCE:
        raise InvalidStateError(f"{gate.name} annihilated the state")
    if abs(weight - 1.0) > config.TOLERANCE:
        logger.warning(f"{gate.name} is not trace preserving: renormalising weight {weight:.6g}")
    return out / math.sqrt(weight) if out.ndim == 1 else out / weight


def electron_populations(state: np.ndarray) -> dict[int, float]:
    """Population of each electron level m_S, summed over m_I."""
    rho = to_density(state)
    diag = np.real(np.diag(rho)).reshape(3, 3)
    return {m: float(diag[level_position(m)].sum()) for m in SPIN1_LEVELS}


def nuclear_qubit_density(state: np.ndarray) -> np.ndarray:
    """2×2 block of the nuclear qubit in the m_S = −1 manifold, renormalised."""
    rho = to_density(state)
    idx = list(NUCLEAR_QUBIT_LEVELS)
    block = rho[np.ix_(idx, idx)]
    weight = float(np.real(np.trace(block)))
    if weight < config.TOLERANCE:
        raise InvalidStateError("nuclear qubit manifold is empty")
    return validate_density_matrix(block / weight, dim=2)
