"""State reconstruction from Rabi traces.

Three reconstructions of a single-qubit pure state:

- RAQST uses the amplitudes of the x-Rabi, y-Rabi and reference traces and
  takes the coordinate signs from the phases.
- RPQST uses only the phases α (x-Rabi) and β (y-Rabi), no reference needed.
- STANDARD reads populations after no pulse, X₉₀ and Y₉₀.

Phase conventions follow rabi.X_RABI_SIGN / rabi.Y_RABI_SIGN:
cos α ∝ n_z, sin α ∝ X·n_y, cos β ∝ n_z, sin β ∝ Y·n_x.
"""

import math
from typing import Iterable, Literal, Optional

import numpy as np

from rabi_qst.errors import (
    AmbiguousStateError,
    ConfigError,
    DomainError,
    InconsistentAmplitudesError,
    RabiQSTError,
)
from rabi_qst.fitting import fit_sine, fit_sine_shared
from rabi_qst.gates import subspace_rotation
from rabi_qst.models import (
    BlochVector,
    DensityBar,
    DensityMatrixModel,
    RabiTrace,
    SineFit,
    StateAngles,
    TomographyReport,
    TomographyResult,
    TomographyRun,
)
from rabi_qst.rabi import X_RABI_PHASE, X_RABI_SIGN, Y_RABI_PHASE, Y_RABI_SIGN, as_qubit_density
from rabi_qst.spin import (
    angles_to_density,
    apply_unitary,
    bloch_to_angles,
    bloch_to_density,
    fidelity,
    normalized,
)
from rabi_qst.utils import config, setup_logger

logger = setup_logger(__name__)

METHODS = ("raqst", "rpqst", "standard")


def sign(value: float) -> int:
    return 1 if value >= 0 else -1


def octant_signs(v: BlochVector) -> dict[str, int]:
    return {"x": sign(v.nx), "y": sign(v.ny), "z": sign(v.nz)}


def pure_result(method: str, v: BlochVector, diagnostics: dict) -> TomographyResult:
    """Normalise v and wrap it as a pure-state result."""
    unit = normalized(v)
    angles = bloch_to_angles(unit)
    return TomographyResult(
        method=method,
        bloch=unit,
        angles=angles,
        rho=DensityMatrixModel.from_array(angles_to_density(angles)),
        diagnostics={"signs": octant_signs(unit), **diagnostics},
    )


# Amplitude Rabi tomography
def check_shared_frequency(*fits: SineFit) -> None:
    freqs = [f.frequency for f in fits]
    spread = max(freqs) / min(freqs) - 1.0
    if spread > config.SHARED_FREQUENCY_SPREAD:
        raise InconsistentAmplitudesError(
            f"Rabi frequencies differ by {100 * spread:.2f}% (limit {100 * config.SHARED_FREQUENCY_SPREAD:.0f}%)"
        )


def raqst(fit_x: SineFit, fit_y: SineFit, fit_ref: SineFit, strict: bool = True) -> TomographyResult:
    """Reconstruct a state from the x, y and reference Rabi amplitudes.

    (A_x/A_ref)² = n_y² + n_z² and (A_y/A_ref)² = n_x² + n_z² fix each
    |n_i|; the signs come from the phases of the x and y traces.

    Args:
        strict: raise on squares outside [−1e−6, 1 + 1e−6]; otherwise clip
            them and flag the result.
    """
    check_shared_frequency(fit_x, fit_y, fit_ref)
    a_ref = fit_ref.amplitude
    if a_ref <= config.PHASE_THRESHOLD * max(abs(fit_ref.offset), 1e-3):
        raise InconsistentAmplitudesError("reference amplitude vanishes; cannot normalise")

    rx = (fit_x.amplitude / a_ref) ** 2
    ry = (fit_y.amplitude / a_ref) ** 2
    nz2 = rx + ry - 1.0
    squares = {"x": ry - nz2, "y": rx - nz2, "z": nz2}

    flags = []
    for axis, value in squares.items():
        if value < -config.CLAMP_WINDOW or value > 1.0 + config.CLAMP_WINDOW:
            message = f"n_{axis}² = {value:.6g} lies outside [0, 1]"
            if strict:
                raise InconsistentAmplitudesError(f"{message}; amplitudes are inconsistent (drift or misfit)")
            flags.append(f"clamped-n{axis}")
            logger.warning(f"{message}; clamping")
        squares[axis] = min(max(value, 0.0), 1.0)

    alpha, beta = fit_x.phase, fit_y.phase
    sz = sign(fit_x.amplitude * math.cos(alpha) + fit_y.amplitude * math.cos(beta))
    sy = sign(X_RABI_SIGN * math.sin(alpha))
    sx = sign(Y_RABI_SIGN * math.sin(beta))

    v = BlochVector(
        nx=sx * math.sqrt(squares["x"]),
        ny=sy * math.sqrt(squares["y"]),
        nz=sz * math.sqrt(squares["z"]),
    )
    result = pure_result(
        "RAQST",
        v,
        {"squares": squares, "amplitude_ratios": {"x": rx, "y": ry}, "flags": flags},
    )
    logger.debug(f"RAQST: θ={result.angles.theta_deg:.6f}°, φ={result.angles.phi_deg:.6f}°")
    return result


# Phase Rabi tomography
def rpqst(fit_x: SineFit, fit_y: SineFit) -> TomographyResult:
    """Reconstruct a state from the x and y Rabi phases alone."""
    if not fit_x.phase_defined:
        raise AmbiguousStateError("x-Rabi phase is undefined: n_y and n_z are undetermined")
    if not fit_y.phase_defined:
        raise AmbiguousStateError("y-Rabi phase is undefined: n_x and n_z are undetermined")
    check_shared_frequency(fit_x, fit_y)

    alpha, beta = fit_x.phase, fit_y.phase
    cos_a, cos_b = math.cos(alpha), math.cos(beta)
    if max(abs(cos_a), abs(cos_b)) < config.PURE_TOLERANCE:
        raise AmbiguousStateError("state lies on the equator: phases do not fix the azimuth")

    # Common factor |n_z|/(r_x r_y) > 0 cancels on normalisation
    v = BlochVector(
        nx=Y_RABI_SIGN * math.sin(beta) * abs(cos_a),
        ny=X_RABI_SIGN * math.sin(alpha) * abs(cos_b),
        nz=cos_a * abs(cos_b),
    )
    return pure_result("RPQST", v, {"phases": {"alpha": alpha, "beta": beta}, "flags": []})


def rpqst_literal(
    fit_x: SineFit, fit_y: SineFit, polar_phase: Literal["beta", "alpha"] = "beta"
) -> tuple[float, float]:
    """(θ, φ) from the one-argument arctangent formulas, in radians.

    φ = π − atan(tan β / tan α) − sgn(sin α)·π/2
    θ = sgn(cos α)·[|atan(tan t / cos φ)| − π/2] + π/2

    with α, β measured so that tan α = n_y/n_z and tan β = n_x/n_z. t = β gives
    the polar angle; t = α reproduces the misprinted form, which is wrong away
    from φ = 45° and similar symmetric points. Undefined when n_x or n_y is 0.
    """
    alpha = math.atan2(X_RABI_SIGN * math.sin(fit_x.phase), math.cos(fit_x.phase))
    beta = math.atan2(Y_RABI_SIGN * math.sin(fit_y.phase), math.cos(fit_y.phase))
    tan_a, tan_b = math.tan(alpha), math.tan(beta)
    if abs(tan_a) < config.NORM_TOLERANCE or abs(math.cos(alpha)) < config.NORM_TOLERANCE:
        raise DomainError("one-argument azimuth formula is singular for n_y = 0 or n_z = 0")

    phi = math.pi - math.atan(tan_b / tan_a) - math.copysign(math.pi / 2, math.sin(alpha))
    cos_phi = math.cos(phi)
    if abs(cos_phi) < config.NORM_TOLERANCE:
        raise DomainError("one-argument polar formula is singular for n_x = 0")

    t = beta if polar_phase == "beta" else alpha
    theta = math.copysign(1.0, math.cos(alpha)) * (abs(math.atan(math.tan(t) / cos_phi)) - math.pi / 2) + math.pi / 2
    return theta, phi


# Standard tomography
def standard_qst(p_z: float, p_x: float, p_y: float) -> TomographyResult:
    """Reconstruct from populations of |0⟩ after no pulse, Y₉₀ (p_x) and X₉₀ (p_y)."""
    for name, p in (("p_z", p_z), ("p_x", p_x), ("p_y", p_y)):
        if not -config.CLAMP_WINDOW <= p <= 1.0 + config.CLAMP_WINDOW:
            raise DomainError(f"population {name} = {p!r} outside [0, 1]")

    raw = BlochVector(
        nx=Y_RABI_SIGN * (1.0 - 2.0 * p_x),
        ny=X_RABI_SIGN * (1.0 - 2.0 * p_y),
        nz=2.0 * p_z - 1.0,
    )
    diagnostics = {"populations": {"z": p_z, "x": p_x, "y": p_y}, "raw_norm": raw.norm}
    if abs(raw.norm - 1.0) <= config.STANDARD_QST_PURITY_WINDOW:
        return pure_result("STANDARD", raw, {**diagnostics, "flags": []})

    logger.warning(f"Standard QST vector has norm {raw.norm:.4f}; reporting it unnormalised")
    flags = ["non-pure"]
    v = raw
    if raw.norm > 1.0:
        flags.append("unphysical")
        v = normalized(raw)
    if v.norm > config.NORM_TOLERANCE:
        unit = normalized(v)
        angles = bloch_to_angles(unit)
    else:
        angles = StateAngles(theta=0.0, phi=0.0, phi_undefined=True)
    return TomographyResult(
        method="STANDARD",
        bloch=v,
        angles=angles,
        rho=DensityMatrixModel.from_array(bloch_to_density(v)),
        diagnostics={"signs": octant_signs(v), **diagnostics, "flags": flags},
    )


def quarter_pulse_populations(state) -> tuple[float, float, float]:
    """(p_z, p_x, p_y) of a qubit state by gate application."""
    rho = as_qubit_density(state)
    x90 = subspace_rotation(0, 1, X_RABI_PHASE, math.pi / 2, dim=2).matrix
    y90 = subspace_rotation(0, 1, Y_RABI_PHASE, math.pi / 2, dim=2).matrix
    p_z = float(np.real(rho[0, 0]))
    p_x = float(np.real(apply_unitary(y90, rho)[0, 0]))
    p_y = float(np.real(apply_unitary(x90, rho)[0, 0]))
    return p_z, p_x, p_y


def quarter_pulse_populations_from_fits(
    fit_x: SineFit, fit_y: SineFit, fit_ref: SineFit
) -> tuple[float, float, float]:
    """(p_z, p_x, p_y) read off the fitted traces at Ωt = 0 and Ωt = π/2.

    Each oscillating part is normalised by the reference amplitude; the decay
    envelope is left out. Values are clipped to [0, 1].
    """
    a_ref = fit_ref.amplitude
    if a_ref <= config.PHASE_THRESHOLD * max(abs(fit_ref.offset), 1e-3):
        raise InconsistentAmplitudesError("reference amplitude vanishes; cannot normalise")

    p_z = 0.5 + (fit_x.amplitude * math.cos(fit_x.phase) + fit_y.amplitude * math.cos(fit_y.phase)) / (4 * a_ref)
    p_y = 0.5 - fit_x.amplitude * math.sin(fit_x.phase) / (2 * a_ref)
    p_x = 0.5 - fit_y.amplitude * math.sin(fit_y.phase) / (2 * a_ref)
    return tuple(min(max(p, 0.0), 1.0) for p in (p_z, p_x, p_y))


# Reports
def shortest_arc(a: float, b: float) -> float:
    """Signed difference a − b wrapped into [−π, π)."""
    return (a - b + math.pi) % (2 * math.pi) - math.pi


def reconstruct_report(result: TomographyResult, target: StateAngles) -> TomographyReport:
    """Compare a reconstruction with the prepared state and emit bar data."""
    rho_exp = result.rho.to_array()
    rho_th = angles_to_density(target)
    bars = [
        DensityBar(
            row=i,
            col=j,
            re_exp=float(rho_exp[i, j].real),
            im_exp=float(rho_exp[i, j].imag),
            re_th=float(rho_th[i, j].real),
            im_th=float(rho_th[i, j].imag),
        )
        for i in range(2)
        for j in range(2)
    ]
    return TomographyReport(
        method=result.method,
        rho_exp=result.rho,
        rho_th=DensityMatrixModel.from_array(rho_th),
        fidelity=fidelity(rho_th, rho_exp),
        delta_theta=result.angles.theta - target.theta,
        delta_phi=shortest_arc(result.angles.phi, target.phi),
        bars=bars,
    )


# Orchestration
def fit_traces(traces: dict[str, RabiTrace], shared_frequency: bool = True, decay: bool = False) -> dict[str, SineFit]:
    labels = [label for label in ("ref", "x", "y") if label in traces]
    if shared_frequency:
        fits = fit_sine_shared([traces[label] for label in labels], decay=decay)
        return dict(zip(labels, fits))
    return {label: fit_sine(traces[label], decay=decay) for label in labels}


def run_tomography(
    traces: dict[str, RabiTrace],
    methods: Iterable[str] = METHODS,
    shared_frequency: bool = True,
    strict: bool = True,
    target: Optional[StateAngles] = None,
    decay: bool = False,
) -> TomographyRun:
    """Fit a trace set and run each requested reconstruction.

    Reconstruction failures are collected per method; missing inputs raise
    ConfigError before any fitting.
    """
    methods = [m.lower() for m in methods]
    unknown = sorted(set(methods) - set(METHODS))
    if unknown:
        raise ConfigError(f"unknown tomography method(s): {', '.join(unknown)}")
    for label in ("x", "y"):
        if label not in traces:
            raise ConfigError(f"missing input: {label}-Rabi trace '{label}'")
    if "ref" not in traces and ({"raqst", "standard"} & set(methods)):
        raise ConfigError("missing input: reference trace 'ref' (needed by raqst and standard)")

    fits = fit_traces(traces, shared_frequency, decay)
    run = TomographyRun(fits=fits)
    for method in methods:
        try:
            if method == "raqst":
                result = raqst(fits["x"], fits["y"], fits["ref"], strict=strict)
            elif method == "rpqst":
                result = rpqst(fits["x"], fits["y"])
            else:
                result = standard_qst(*quarter_pulse_populations_from_fits(fits["x"], fits["y"], fits["ref"]))
        except RabiQSTError as e:
            logger.warning(f"{method} reconstruction failed: {e}")
            run.errors[method] = f"{type(e).__name__}: {e}"
            continue

        if target is not None:
            report = reconstruct_report(result, target)
            result = result.model_copy(update={"fidelity_vs_target": report.fidelity})
            run.reports[method] = report
        run.results[method] = result
        logger.info(
            f"{result.method}: θ={result.angles.theta_deg:.6f}°, φ={result.angles.phi_deg:.6f}°"
            + (f", F={result.fidelity_vs_target:.10f}" if result.fidelity_vs_target is not None else "")
        )
    return run
