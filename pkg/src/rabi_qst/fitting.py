"""Sinusoid fitting of Rabi traces.

Model per trace k:

    y_k(t) = O_k + (a_k cos Ωt − b_k sin Ωt)·exp(−γt)

with a = A cos ψ and b = A sin ψ, so y = O + A cos(Ωt + ψ)·exp(−γt). Ω and γ
are shared when several traces are fitted jointly. Starting values come from a
Lomb–Scargle scan (irregular grids are fine) and a linear solve; a
Levenberg–Marquardt refinement polishes them.
"""

import math
from typing import Optional, Sequence

import numpy as np
from scipy.optimize import least_squares
from scipy.signal import lombscargle

from rabi_qst.errors import FitError
from rabi_qst.models import RabiTrace, SineFit, wrap_phase
from rabi_qst.utils import config, setup_logger

logger = setup_logger(__name__)

MIN_POINTS = 8
SCAN_OVERSAMPLING = 20
REFINE_POINTS = 201


def canonical_amplitude_phase(amplitude: float, phase: float) -> tuple[float, float]:
    """Fold the sign of A into ψ and wrap ψ into [0, 2π)."""
    if amplitude < 0:
        return -amplitude, wrap_phase(phase + math.pi)
    return amplitude, wrap_phase(phase)


def is_flat(trace: RabiTrace) -> bool:
    y = trace.y
    return float(np.ptp(y)) <= config.TOLERANCE * max(1.0, float(np.max(np.abs(y))))


def estimate_frequency(traces: Sequence[RabiTrace]) -> float:
    """Angular frequency of the strongest common oscillation.

    The summed periodogram of the mean-subtracted traces is scanned from one
    half-cycle over the record up to the grid Nyquist limit, then refined
    around the peak.
    """
    active = [tr for tr in traces if not is_flat(tr)]
    if not active:
        raise FitError("all traces are flat; frequency is undetermined")

    span = max(float(tr.t[-1] - tr.t[0]) for tr in active)
    n = max(len(tr.times) for tr in active)
    grid = np.linspace(math.pi / span, math.pi * (n - 1) / span, SCAN_OVERSAMPLING * n)

    def power(freqs: np.ndarray) -> np.ndarray:
        return sum(lombscargle(tr.t, tr.y - tr.y.mean(), freqs) for tr in active)

    peak = int(np.argmax(power(grid)))
    lo = grid[max(peak - 1, 0)]
    hi = grid[min(peak + 1, len(grid) - 1)]
    fine = np.linspace(lo, hi, REFINE_POINTS)
    omega = float(fine[np.argmax(power(fine))])
    logger.debug(f"Frequency scan peak at {omega:.6g} rad/us")
    return omega


def linear_seed(trace: RabiTrace, omega: float) -> np.ndarray:
    """Least-squares (a, b, O) at fixed Ω."""
    t = trace.t
    design = np.column_stack([np.cos(omega * t), -np.sin(omega * t), np.ones_like(t)])
    coeffs, *_ = np.linalg.lstsq(design, trace.y, rcond=None)
    return coeffs


class _JointModel:
    """Parameter layout [Ω?] [γ?] (a, b, O)×K over concatenated residuals."""

    def __init__(self, traces: Sequence[RabiTrace], fixed_omega: Optional[float], decay: bool):
        self.traces = list(traces)
        self.fixed_omega = fixed_omega
        self.decay = decay
        self.n_global = (fixed_omega is None) + decay

    def unpack(self, p: np.ndarray) -> tuple[float, float, np.ndarray]:
        i = 0
        if self.fixed_omega is None:
            omega = p[0]
            i = 1
        else:
            omega = self.fixed_omega
        gamma = p[i] if self.decay else 0.0
        return omega, gamma, p[self.n_global :].reshape(-1, 3)

    def residuals(self, p: np.ndarray) -> np.ndarray:
        omega, gamma, local = self.unpack(p)
        out = []
        for tr, (a, b, offset) in zip(self.traces, local):
            t = tr.t
            env = np.exp(-gamma * t)
            out.append((a * np.cos(omega * t) - b * np.sin(omega * t)) * env + offset - tr.y)
        return np.concatenate(out)

    def jacobian(self, p: np.ndarray) -> np.ndarray:
        omega, gamma, local = self.unpack(p)
        n_rows = sum(len(tr.times) for tr in self.traces)
        jac = np.zeros((n_rows, len(p)))
        row = 0
        for k, (tr, (a, b, _)) in enumerate(zip(self.traces, local)):
            t = tr.t
            rows = slice(row, row + len(t))
            env = np.exp(-gamma * t)
            c, s = np.cos(omega * t), np.sin(omega * t)
            col = 0
            if self.fixed_omega is None:
                jac[rows, col] = (-a * s - b * c) * t * env
                col += 1
            if self.decay:
                jac[rows, col] = -t * (a * c - b * s) * env
            base = self.n_global + 3 * k
            jac[rows, base] = c * env
            jac[rows, base + 1] = -s * env
            jac[rows, base + 2] = 1.0
            row += len(t)
        return jac


def _check_inputs(traces: Sequence[RabiTrace], n_params: int) -> None:
    for tr in traces:
        if len(tr.times) < MIN_POINTS:
            raise FitError(f"trace {tr.label!r} has {len(tr.times)} points, need at least {MIN_POINTS}")
        if np.any(np.diff(tr.t) <= 0):
            raise FitError(f"trace {tr.label!r} times are not strictly increasing")
    n_points = sum(len(tr.times) for tr in traces)
    if n_points < n_params:
        raise FitError(f"{n_points} points cannot determine {n_params} parameters")


def fit_sine_shared(
    traces: Sequence[RabiTrace],
    fix_frequency: Optional[float] = None,
    decay: bool = False,
) -> list[SineFit]:
    """Fit several traces with a common Rabi frequency (and decay rate)."""
    if not traces:
        raise FitError("no traces to fit")
    if fix_frequency is not None and fix_frequency <= 0:
        raise FitError("fixed frequency must be positive")

    flags: list[str] = []
    omega = fix_frequency
    if omega is None and all(is_flat(tr) for tr in traces):
        # Nothing oscillates; any frequency describes the data equally well
        span = max(float(tr.t[-1] - tr.t[0]) for tr in traces)
        omega = 2 * math.pi / span
        flags.append("frequency-undetermined")
        logger.warning("All traces are flat; fitting offsets only")

    model = _JointModel(traces, omega, decay)
    n_params = model.n_global + 3 * len(traces)
    _check_inputs(traces, n_params)

    seed_omega = omega if omega is not None else estimate_frequency(traces)
    p0 = np.concatenate(
        [
            [seed_omega] if omega is None else [],
            [0.0] if decay else [],
            *[linear_seed(tr, seed_omega) for tr in traces],
        ]
    )

    result = least_squares(
        model.residuals,
        p0,
        jac=model.jacobian,
        method="lm",
        xtol=config.FIT_XTOL,
        ftol=1e-14,
        gtol=1e-14,
        max_nfev=config.FIT_MAX_ITERATIONS,
    )
    converged = result.status > 0
    if not converged:
        flags.append("not-converged")
        logger.warning(f"Fit did not converge after {result.nfev} evaluations; keeping best parameters")

    p = result.x
    n_points = len(result.fun)
    dof = n_points - len(p)
    s_sq = 2 * result.cost / dof if dof > 0 else 0.0
    cov = np.linalg.pinv(result.jac.T @ result.jac) * s_sq
    stderr = np.sqrt(np.clip(np.diag(cov), 0.0, None))

    fitted_omega, gamma, local = model.unpack(p)
    if fitted_omega < 0:
        # cos(−Ωt + ψ) = cos(Ωt − ψ): mirror b
        fitted_omega = -fitted_omega
        local = local * np.array([1.0, -1.0, 1.0])

    global_err: dict[str, float] = {}
    if omega is None:
        global_err["frequency"] = float(stderr[0])
        span = max(float(tr.t[-1] - tr.t[0]) for tr in traces)
        if fitted_omega * span < 2 * math.pi:
            flags.append("short-span")
            logger.warning("Record covers less than one Rabi period; frequency is poorly constrained")
    decay_time = None
    if decay:
        i = model.n_global - 1
        if gamma > 0:
            decay_time = 1.0 / gamma
            global_err["decay_time"] = float(stderr[i] / gamma**2)
        else:
            flags.append("no-decay")
    if len(traces) > 1:
        flags.append("shared-frequency")

    fits = []
    offset_index = model.n_global
    for k, (tr, (a, b, offset)) in enumerate(zip(traces, local)):
        block = slice(offset_index + 3 * k, offset_index + 3 * k + 3)
        cov_ab = cov[block, block][:2, :2]
        amplitude, phase = canonical_amplitude_phase(math.hypot(a, b), math.atan2(b, a))
        if amplitude > 0:
            grad_a = np.array([a, b]) / amplitude
            grad_psi = np.array([-b, a]) / amplitude**2
            err_a = math.sqrt(max(float(grad_a @ cov_ab @ grad_a), 0.0))
            err_psi = math.sqrt(max(float(grad_psi @ cov_ab @ grad_psi), 0.0))
        else:
            err_a, err_psi = float(stderr[block][0]), None

        phase_defined = bool(amplitude > config.PHASE_THRESHOLD * max(abs(offset), 1e-3))
        trace_flags = list(flags)
        if not phase_defined:
            trace_flags.append("phase-undefined")

        rows = slice(sum(len(t.times) for t in traces[:k]), sum(len(t.times) for t in traces[: k + 1]))
        fits.append(
            SineFit(
                amplitude=amplitude,
                phase=phase,
                frequency=fitted_omega,
                offset=float(offset),
                decay_time=decay_time,
                residual_rms=float(np.sqrt(np.mean(result.fun[rows] ** 2))),
                param_stderr={
                    **global_err,
                    "amplitude": err_a,
                    "phase": err_psi,
                    "offset": float(stderr[block][2]),
                },
                phase_defined=phase_defined,
                converged=converged,
                iterations=int(result.nfev),
                flags=trace_flags,
            )
        )

    logger.info(
        f"Fitted {len(traces)} trace(s): Ω = {fitted_omega:.6g} rad/us, "
        f"amplitudes {', '.join(f'{f.amplitude:.4g}' for f in fits)}"
    )
    return fits


def fit_sine(trace: RabiTrace, fix_frequency: Optional[float] = None, decay: bool = False) -> SineFit:
    """Fit y(t) = O + A cos(Ωt + ψ)[·exp(−t/T)] to one trace."""
    return fit_sine_shared([trace], fix_frequency=fix_frequency, decay=decay)[0]
