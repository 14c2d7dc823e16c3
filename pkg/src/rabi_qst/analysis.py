"""Error-sensitivity sweeps, Monte Carlo fidelity studies and the octant suite."""

import math
from concurrent.futures import ThreadPoolExecutor
from typing import Iterable, Optional, Sequence

import numpy as np

from rabi_qst.errors import AmbiguousStateError, RabiQSTError
from rabi_qst.fitting import canonical_amplitude_phase
from rabi_qst.models import (
    FidelityStats,
    MonteCarloRecord,
    MonteCarloResult,
    OctantRow,
    RabiConfig,
    SineFit,
    StateAngles,
    SweepResult,
    SweepSpec,
    wrap_phase,
)
from rabi_qst.rabi import X_RABI_SIGN, Y_RABI_SIGN, TracePath, make_config, simulate_trace_set
from rabi_qst.spin import angles_to_bloch, angles_to_density, fidelity
from rabi_qst.tomography import raqst, rpqst, run_tomography
from rabi_qst.utils import config, setup_logger

logger = setup_logger(__name__)

# One representative per open octant: θ 55°/125° sets n_z, φ quadrant sets n_x, n_y
OCTANT_STATES = tuple((theta, phi) for theta in (55.0, 125.0) for phi in (45.0, 135.0, 225.0, 315.0))
NUCLEAR_DEMO_STATES = ((58.0, 249.0), (137.0, 53.0), (88.0, 270.0))
EXTRA_STATES = ((30.0, 160.0), (150.0, 300.0))

NOISELESS_THRESHOLD = 1.0 - 1e-8
NOISY_THRESHOLD = 0.98
SIGN_MARGIN = 0.1


# Error sweeps
def ideal_rabi_fits(
    angles: StateAngles, contrast: float = 1.0, offset: float = 0.0, rabi_frequency: float = config.DEFAULT_RABI_FREQUENCY
) -> tuple[SineFit, SineFit, SineFit]:
    """Exact x-Rabi, y-Rabi and reference fits of a state, no fitting involved."""
    v = angles_to_bloch(angles)
    half = contrast / 2

    def make(amplitude: float, phase: float) -> SineFit:
        amplitude, phase = canonical_amplitude_phase(amplitude, phase)
        level = offset + half
        return SineFit(
            amplitude=amplitude,
            phase=phase,
            frequency=rabi_frequency,
            offset=level,
            phase_defined=bool(amplitude > config.PHASE_THRESHOLD * max(abs(level), 1e-3)),
        )

    fit_x = make(half * math.hypot(v.ny, v.nz), math.atan2(X_RABI_SIGN * v.ny, v.nz))
    fit_y = make(half * math.hypot(v.nx, v.nz), math.atan2(Y_RABI_SIGN * v.nx, v.nz))
    fit_ref = make(half, 0.0)
    return fit_x, fit_y, fit_ref


def perturb(fit: SineFit, quantity: str, factor: float) -> SineFit:
    """Scale the amplitude, or the signed phase in (−π, π], by `factor`."""
    if quantity == "amplitude":
        return fit.model_copy(update={"amplitude": fit.amplitude * factor})
    return fit.model_copy(update={"phase": wrap_phase(fit.signed_phase * factor)})


def sweep_point(spec: SweepSpec, theta_deg: float, sign: int) -> tuple[Optional[float], list[str]]:
    angles = StateAngles.from_degrees(theta_deg, spec.phi)
    if spec.relative_error == 0.0:
        return 1.0, []

    fit_x, fit_y, fit_ref = ideal_rabi_fits(angles)
    fit_x = perturb(fit_x, spec.perturbed_quantity, 1.0 + sign * spec.relative_error)
    try:
        if spec.method == "RAQST":
            result = raqst(fit_x, fit_y, fit_ref, strict=False)
        else:
            result = rpqst(fit_x, fit_y)
    except AmbiguousStateError as e:
        return None, [f"ambiguous: {e}"]
    return fidelity(angles_to_density(angles), result.rho.to_array()), list(result.diagnostics.get("flags", []))


def error_sweep(spec: SweepSpec) -> SweepResult:
    """Fidelity against the ideal state after a (1 ± ε) change of one quantity."""
    fid, plus, minus, flags = [], [], [], []
    for theta in spec.theta_grid:
        f_plus, flags_plus = sweep_point(spec, theta, +1)
        f_minus, flags_minus = sweep_point(spec, theta, -1)
        plus.append(f_plus)
        minus.append(f_minus)
        known = [f for f in (f_plus, f_minus) if f is not None]
        fid.append(min(known) if known else None)
        flags.append(sorted(set(flags_plus) | set(flags_minus)))

    logger.info(
        f"Sweep {spec.method}/{spec.perturbed_quantity} ε={spec.relative_error}: "
        f"{len(spec.theta_grid)} points, min F = {min((f for f in fid if f is not None), default=float('nan')):.6f}"
    )
    return SweepResult(
        theta_deg=list(spec.theta_grid),
        fidelity=fid,
        fidelity_plus=plus,
        fidelity_minus=minus,
        flags=flags,
        spec=spec,
    )


# Monte Carlo
def sample_uniform_states(n_states: int, seed: int, min_polar_deg: float = 0.0) -> list[StateAngles]:
    """Uniform pure states on the sphere, optionally keeping min_polar_deg away from the poles."""
    if n_states < 1:
        raise ValueError("n_states must be at least 1")
    rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(0,)))
    margin = math.radians(min_polar_deg)
    cos_theta = rng.uniform(math.cos(math.pi - margin), math.cos(margin), size=n_states)
    phi = rng.uniform(0.0, 2 * math.pi, size=n_states)
    return [
        StateAngles(theta=float(np.arccos(c)), phi=wrap_phase(float(p)))
        for c, p in zip(cos_theta, phi)
    ]


def summarize(values: Sequence[Optional[float]]) -> FidelityStats:
    known = [v for v in values if v is not None]
    failures = len(values) - len(known)
    if not known:
        return FidelityStats(mean=None, median=None, min=None, max=None, count=0, failures=failures)
    arr = np.asarray(known)
    return FidelityStats(
        mean=float(np.mean(arr)),
        median=float(np.median(arr)),
        min=float(np.min(arr)),
        max=float(np.max(arr)),
        count=len(known),
        failures=failures,
    )


def monte_carlo_fidelity(
    n_states: int,
    cfg: RabiConfig,
    methods: Iterable[str] = ("raqst", "rpqst"),
    path: TracePath = "electron",
    min_polar_deg: float = 0.0,
    shared_frequency: bool = True,
    workers: int = 1,
) -> MonteCarloResult:
    """Reconstruction fidelity over uniformly sampled states under the noise in cfg.

    State k uses traces 3k, 3k+1, 3k+2 of the cfg.seed stream, so results do
    not depend on `workers`.
    """
    methods = [m.lower() for m in methods]
    states = sample_uniform_states(n_states, cfg.seed, min_polar_deg)

    def run_one(k: int) -> MonteCarloRecord:
        angles = states[k]
        record = MonteCarloRecord(
            index=k,
            theta=angles.theta,
            phi=angles.phi,
            fidelity={m: None for m in methods},
            flags={m: [] for m in methods},
        )
        try:
            traces = simulate_trace_set(angles, cfg, path, include_ref=True, trace_index_base=3 * k)
            run = run_tomography(traces, methods, shared_frequency, strict=False, target=angles)
        except RabiQSTError as e:
            logger.warning(f"State {k}: {e}")
            for m in methods:
                record.flags[m].append(f"{type(e).__name__}: {e}")
            return record
        for m in methods:
            if m in run.results:
                record.fidelity[m] = run.results[m].fidelity_vs_target
                record.flags[m].extend(run.results[m].diagnostics.get("flags", []))
            else:
                record.flags[m].append(run.errors[m])
        return record

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            records = list(pool.map(run_one, range(n_states)))
    else:
        records = [run_one(k) for k in range(n_states)]

    stats = {m: summarize([r.fidelity[m] for r in records]) for m in methods}
    for m, s in stats.items():
        logger.info(f"Monte Carlo {m}: mean F = {s.mean}, median F = {s.median}, failures = {s.failures}")
    return MonteCarloResult(
        stats=stats,
        records=records,
        config={
            **cfg.model_dump(exclude={"time_grid"}),
            "points": len(cfg.time_grid),
            "n_states": n_states,
            "methods": methods,
            "path": path,
            "min_polar_deg": min_polar_deg,
        },
    )


# Octant suite
def signs_match(target: StateAngles, bloch) -> bool:
    """Compare coordinate signs wherever the target component is clearly non-zero."""
    expected = angles_to_bloch(target).as_array()
    found = bloch.as_array()
    mask = np.abs(expected) > SIGN_MARGIN
    return bool(np.all(np.sign(expected[mask]) == np.sign(found[mask])))


def octant_suite(
    noise_sigma: float = 0.0,
    seed: int = 0,
    methods: Sequence[str] = ("raqst", "rpqst"),
    threshold: Optional[float] = None,
) -> list[OctantRow]:
    """Round trip the eight octant states, the nuclear demo states and two extras."""
    if threshold is None:
        threshold = NOISELESS_THRESHOLD if noise_sigma == 0 else NOISY_THRESHOLD
    cfg = make_config(noise_sigma=noise_sigma, seed=seed)

    cases = [(f"octant {i + 1}", "electron", s) for i, s in enumerate(OCTANT_STATES)]
    cases += [(f"nuclear demo {i + 1}", "nuclear", s) for i, s in enumerate(NUCLEAR_DEMO_STATES)]
    cases += [(f"extra {i + 1}", "electron", s) for i, s in enumerate(EXTRA_STATES)]

    rows = []
    for k, (label, path, (theta_deg, phi_deg)) in enumerate(cases):
        angles = StateAngles.from_degrees(theta_deg, phi_deg)
        traces = simulate_trace_set(angles, cfg, path, include_ref=True, trace_index_base=3 * k)
        run = run_tomography(traces, methods, strict=False, target=angles)
        for m in methods:
            result = run.results.get(m.lower())
            fid = result.fidelity_vs_target if result else None
            match = signs_match(angles, result.bloch) if result else None
            rows.append(
                OctantRow(
                    label=label,
                    path=path,
                    theta_deg=theta_deg,
                    phi_deg=phi_deg,
                    method=m.upper(),
                    fidelity=fid,
                    signs_match=match,
                    passed=bool(fid is not None and fid >= threshold and match),
                )
            )

    failed = [r for r in rows if not r.passed]
    logger.info(f"Octant suite: {len(rows) - len(failed)}/{len(rows)} passed")
    return rows
