#!/usr/bin/env python3
"""Command line for simulating Rabi traces and reconstructing states from them."""

import math
from contextlib import contextmanager
from pathlib import Path
from typing import Optional

import numpy as np
import typer
from rich.console import Console
from rich.panel import Panel
from rich.table import Table

from rabi_qst import __version__
from rabi_qst.analysis import error_sweep, monte_carlo_fidelity, octant_suite
from rabi_qst.errors import ConfigError, RabiQSTError
from rabi_qst.fitting import fit_sine, fit_sine_shared
from rabi_qst.gates import HYBRID_DIM, HYBRID_LABELS, hybrid_ket, hybrid_index
from rabi_qst.io import (
    monte_carlo_csv,
    octant_csv,
    read_trace,
    sweep_csv,
    to_json,
    write_json,
    write_text,
    write_trace,
)
from rabi_qst.models import DensityMatrixModel, SweepSpec
from rabi_qst.rabi import init_sequence_snapshots, nuclear_sequence_states, simulate_trace_set
from rabi_qst.run_config import RunConfig, load_run_config
from rabi_qst.tomography import run_tomography
from rabi_qst.utils import config, setup_logger

logger = setup_logger(__name__)

app = typer.Typer(help=f"Rabi-based quantum state tomography (v{__version__})", no_args_is_help=True)
console = Console()
err_console = Console(stderr=True)

SeedOption = typer.Option(None, "--seed", help="Random seed")
FormatOption = typer.Option(None, "--format", help="Output format: csv or json")
OutOption = typer.Option(None, "--out", "-o", help="Output file or directory")


@contextmanager
def handle_errors():
    """Map library errors to exit codes: 2 for configuration, 1 for everything else."""
    try:
        yield
    except ConfigError as e:
        err_console.print(f"[red]Configuration error:[/red] {e}")
        raise typer.Exit(2)
    except RabiQSTError as e:
        err_console.print(f"[red]{type(e).__name__}:[/red] {e}")
        raise typer.Exit(1)


def resolve(ctx: typer.Context, **overrides) -> RunConfig:
    """Global flags, then command flags, over the config file."""
    state = ctx.obj or {}
    merged = {**state.get("overrides", {})}
    merged.update({k: v for k, v in overrides.items() if v is not None})
    return load_run_config(state.get("config_path"), merged)


def emit(text: str, out: Optional[str]) -> None:
    """Write results to a file, or to stdout when no file is given."""
    if out:
        path = write_text(Path(out), text)
        err_console.print(f"[dim]Wrote {path}[/dim]")
    else:
        typer.echo(text, nl=False)


@app.callback()
def main(
    ctx: typer.Context,
    seed: Optional[int] = SeedOption,
    fmt: Optional[str] = FormatOption,
    out: Optional[Path] = OutOption,
    config_file: Optional[Path] = typer.Option(None, "--config", "-c", help="KEY=VALUE run config file"),
):
    """Global options apply to every command; command flags take precedence."""
    try:
        config.validate()
    except ValueError as e:
        err_console.print(f"[red]Configuration error:[/red] {e}")
        raise typer.Exit(2)

    ctx.obj = {
        "config_path": config_file,
        "overrides": {"seed": seed, "format": fmt, "out": str(out) if out else None},
    }


@app.command()
def simulate(
    ctx: typer.Context,
    theta: Optional[float] = typer.Option(None, "--theta", help="Polar angle, degrees"),
    phi: Optional[float] = typer.Option(None, "--phi", help="Azimuth, degrees"),
    mode: Optional[str] = typer.Option(None, "--mode", help="electron or nuclear"),
    sigma: Optional[float] = typer.Option(None, "--sigma", help="Gaussian noise std-dev"),
    drift: Optional[float] = typer.Option(None, "--drift", help="Fractional contrast loss per trace"),
    decay: Optional[float] = typer.Option(None, "--decay", help="Decay time, us"),
    points: Optional[int] = typer.Option(None, "--points", help="Points per trace"),
    ref: Optional[bool] = typer.Option(None, "--ref/--no-ref", help="Also write the reference trace"),
    seed: Optional[int] = SeedOption,
    fmt: Optional[str] = FormatOption,
    out: Optional[Path] = OutOption,
):
    """Write x-Rabi, y-Rabi and reference traces for a prepared state."""
    with handle_errors():
        cfg = resolve(
            ctx,
            theta=theta,
            phi=phi,
            mode=mode,
            noise_sigma=sigma,
            drift=drift,
            decay_time=decay,
            points=points,
            include_ref=ref,
            seed=seed,
            format=fmt,
            out=str(out) if out else None,
        )
        traces = simulate_trace_set(cfg.state(), cfg.rabi_config(), cfg.mode, include_ref=cfg.include_ref)
        out_dir = Path(cfg.out or "traces")

        table = Table(title=f"{cfg.mode.capitalize()} traces for θ={cfg.theta}°, φ={cfg.phi}°")
        table.add_column("Trace", style="cyan")
        table.add_column("File")
        table.add_column("Points", justify="right")
        table.add_column("Min", justify="right")
        table.add_column("Max", justify="right")
        for label, trace in traces.items():
            path = write_trace(trace, out_dir / f"{label}.{cfg.format}")
            table.add_row(label, str(path), str(len(trace.times)), f"{min(trace.signal):.6f}", f"{max(trace.signal):.6f}")
        console.print(table)


@app.command()
def fit(
    ctx: typer.Context,
    traces: list[Path] = typer.Argument(..., help="Trace files (CSV or JSON)"),
    shared: Optional[bool] = typer.Option(None, "--shared/--no-shared", help="Fit one common Rabi frequency"),
    fit_decay: Optional[bool] = typer.Option(None, "--fit-decay/--no-fit-decay", help="Fit an exponential envelope"),
    out: Optional[Path] = OutOption,
):
    """Fit O + A cos(Ωt + ψ) to each trace."""
    with handle_errors():
        cfg = resolve(ctx, shared_frequency=shared, fit_decay=fit_decay, out=str(out) if out else None)
        loaded = [read_trace(p) for p in traces]
        if cfg.shared_frequency and len(loaded) > 1:
            fits = fit_sine_shared(loaded, decay=cfg.fit_decay)
        else:
            fits = [fit_sine(tr, decay=cfg.fit_decay) for tr in loaded]
        result = {tr.label: f for tr, f in zip(loaded, fits)}

        if not cfg.out:
            emit(to_json(result), None)
            return
        write_json(result, Path(cfg.out))
        table = Table(title="Sine fits")
        table.add_column("Trace", style="cyan")
        table.add_column("Amplitude", justify="right")
        table.add_column("Phase (deg)", justify="right")
        table.add_column("Ω (rad/us)", justify="right")
        table.add_column("Offset", justify="right")
        table.add_column("Flags")
        for label, f in result.items():
            table.add_row(
                label,
                f"{f.amplitude:.8f}",
                f"{math.degrees(f.phase):.6f}",
                f"{f.frequency:.8f}",
                f"{f.offset:.8f}",
                ", ".join(f.flags),
            )
        console.print(table)


@app.command()
def tomo(
    ctx: typer.Context,
    x: Path = typer.Option(..., "--x", help="x-Rabi trace file"),
    y: Path = typer.Option(..., "--y", help="y-Rabi trace file"),
    ref: Optional[Path] = typer.Option(None, "--ref", help="Reference trace file (RAQST, standard)"),
    method: Optional[str] = typer.Option(None, "--method", "-m", help="raqst, rpqst, standard or all"),
    theta: Optional[float] = typer.Option(None, "--theta", help="Target polar angle, degrees"),
    phi: Optional[float] = typer.Option(None, "--phi", help="Target azimuth, degrees"),
    shared: Optional[bool] = typer.Option(None, "--shared/--no-shared", help="Fit one common Rabi frequency"),
    strict: Optional[bool] = typer.Option(None, "--strict/--no-strict", help="Reject inconsistent amplitudes"),
    out: Optional[Path] = OutOption,
):
    """Reconstruct the state behind a set of Rabi traces."""
    with handle_errors():
        cfg = resolve(
            ctx,
            method=method,
            theta=theta,
            phi=phi,
            shared_frequency=shared,
            strict=strict,
            out=str(out) if out else None,
        )
        out_path = Path(cfg.out or "tomography.json")
        given = {"theta", "phi"} & cfg.model_fields_set
        target = cfg.state() if len(given) == 2 else None
        if len(given) == 1:
            err_console.print(
                f"[yellow]Warning:[/yellow] only --{given.pop()} given; pass both --theta and --phi "
                "for a fidelity report against a target"
            )

        traces = {"x": read_trace(x, "x"), "y": read_trace(y, "y")}
        if ref is not None:
            traces["ref"] = read_trace(ref, "ref")

        try:
            run = run_tomography(
                traces,
                cfg.methods(),
                shared_frequency=cfg.shared_frequency,
                strict=cfg.strict,
                target=target,
                decay=cfg.fit_decay,
            )
        except ConfigError:
            raise
        except RabiQSTError as e:
            write_json({"error": f"{type(e).__name__}: {e}"}, out_path)
            raise

        write_json(run, out_path)
        for name, result in run.results.items():
            lines = [
                f"θ = {result.angles.theta_deg:.6f}°",
                f"φ = {result.angles.phi_deg:.6f}°",
                f"n = ({result.bloch.nx:+.8f}, {result.bloch.ny:+.8f}, {result.bloch.nz:+.8f})",
            ]
            if result.fidelity_vs_target is not None:
                lines.append(f"F = {result.fidelity_vs_target:.10f}")
            flags = result.diagnostics.get("flags", [])
            if flags:
                lines.append(f"flags: {', '.join(flags)}")
            console.print(Panel("\n".join(lines), title=f"[bold green]{result.method}[/bold green]", border_style="green"))
        for name, error in run.errors.items():
            console.print(Panel(f"[red]Error:[/red] {error}", title=f"[bold red]{name.upper()}[/bold red]", border_style="red"))
        err_console.print(f"[dim]Wrote {out_path}[/dim]")

        if run.errors:
            raise typer.Exit(1)


@app.command()
def sweep(
    ctx: typer.Context,
    method: Optional[str] = typer.Option(None, "--method", "-m", help="raqst or rpqst"),
    quantity: Optional[str] = typer.Option(None, "--quantity", help="amplitude or phase"),
    eps: Optional[float] = typer.Option(None, "--eps", help="Relative error"),
    phi: Optional[float] = typer.Option(None, "--phi", help="Fixed azimuth, degrees"),
    step: Optional[float] = typer.Option(None, "--step", help="Polar grid step, degrees"),
    both_signs: Optional[bool] = typer.Option(None, "--both-signs/--worst-case", help="Emit both perturbation signs"),
    fmt: Optional[str] = FormatOption,
    out: Optional[Path] = OutOption,
):
    """Fidelity versus polar angle under a relative error in one Rabi parameter."""
    with handle_errors():
        cfg = resolve(
            ctx,
            sweep_method=method,
            quantity=quantity,
            eps=eps,
            sweep_phi=phi,
            theta_step=step,
            both_signs=both_signs,
            format=fmt,
            out=str(out) if out else None,
        )
        grid = np.arange(cfg.theta_step, 180.0, cfg.theta_step)
        spec = SweepSpec(
            method=cfg.sweep_method.upper(),
            perturbed_quantity=cfg.quantity,
            relative_error=cfg.eps,
            theta_grid=[float(t) for t in grid if 0.0 < t < 180.0],
            phi=cfg.sweep_phi,
            perturbation_mode="both-signs" if cfg.both_signs else "worst-case-sign",
        )
        result = error_sweep(spec)
        emit(sweep_csv(result) if cfg.format == "csv" else to_json(result), cfg.out)


@app.command()
def mc(
    ctx: typer.Context,
    n: Optional[int] = typer.Option(None, "--n", help="Number of random states"),
    sigma: Optional[float] = typer.Option(None, "--sigma", help="Gaussian noise std-dev"),
    drift: Optional[float] = typer.Option(None, "--drift", help="Fractional contrast loss per trace"),
    method: Optional[str] = typer.Option(None, "--method", "-m", help="raqst, rpqst, standard or all"),
    mode: Optional[str] = typer.Option(None, "--mode", help="electron or nuclear"),
    min_polar: Optional[float] = typer.Option(None, "--min-polar", help="Keep states this far from the poles, degrees"),
    workers: Optional[int] = typer.Option(None, "--workers", help="Parallel workers"),
    octants: bool = typer.Option(False, "--octants", help="Run the octant suite instead"),
    seed: Optional[int] = SeedOption,
    fmt: Optional[str] = FormatOption,
    out: Optional[Path] = OutOption,
):
    """Monte Carlo fidelity statistics over random states."""
    with handle_errors():
        cfg = resolve(
            ctx,
            n_states=n,
            noise_sigma=sigma,
            drift=drift,
            method=method,
            mode=mode,
            min_polar_deg=min_polar,
            workers=workers,
            seed=seed,
            format=fmt,
            out=str(out) if out else None,
        )
        if octants:
            rows = octant_suite(noise_sigma=cfg.noise_sigma, seed=cfg.seed, methods=cfg.methods())
            emit(octant_csv(rows) if cfg.format == "csv" else to_json(rows), cfg.out)
            if not all(r.passed for r in rows):
                raise typer.Exit(1)
            return

        result = monte_carlo_fidelity(
            cfg.n_states,
            cfg.rabi_config(),
            methods=cfg.methods(),
            path=cfg.mode,
            min_polar_deg=cfg.min_polar_deg,
            shared_frequency=cfg.shared_frequency,
            workers=cfg.workers,
        )
        if cfg.format == "json":
            emit(to_json(result), cfg.out)
        else:
            emit(monte_carlo_csv(result), cfg.out)

        table = Table(title=f"Fidelity over {cfg.n_states} states")
        table.add_column("Method", style="cyan")
        for column in ("Mean", "Median", "Min", "Max", "Failures"):
            table.add_column(column, justify="right")
        for m, s in result.stats.items():
            table.add_row(
                m.upper(),
                *(f"{v:.8f}" if v is not None else "N/A" for v in (s.mean, s.median, s.min, s.max)),
                str(s.failures),
            )
        err_console.print(table)


def parse_hybrid_input(spec: str) -> np.ndarray:
    """'mixed' for 𝕀₉/9, otherwise 'm_S,m_I' for a basis state."""
    if spec == "mixed":
        return np.eye(HYBRID_DIM, dtype=complex) / HYBRID_DIM
    try:
        m_s, m_i = (int(v) for v in spec.split(","))
        return hybrid_ket(m_s, m_i)
    except ValueError as e:
        raise ConfigError(f"input state must be 'mixed' or 'm_S,m_I', got {spec!r}") from e


def ket_dict(psi: np.ndarray) -> dict:
    return {"re": psi.real.tolist(), "im": psi.imag.tolist()}


@app.command()
def circuit(
    ctx: typer.Context,
    input_state: str = typer.Option("mixed", "--input", help="Register input: 'mixed' or 'm_S,m_I'"),
    u3: Optional[str] = typer.Option(None, "--u3", help="U3 variant: corrected or literal"),
    pump: Optional[bool] = typer.Option(None, "--pump/--no-pump", help="Initial laser pump before U1"),
    theta: Optional[float] = typer.Option(None, "--theta", help="Nuclear polar angle, degrees"),
    phi: Optional[float] = typer.Option(None, "--phi", help="Nuclear azimuth, degrees"),
    theta_r: Optional[float] = typer.Option(None, "--theta-r", help="Nuclear Rabi angle, degrees"),
    dump_states: bool = typer.Option(False, "--dump-states", help="Include the state after every gate"),
    out: Optional[Path] = OutOption,
):
    """Run the initialisation circuit and the nuclear preparation/Rabi circuit."""
    with handle_errors():
        cfg = resolve(
            ctx,
            u3_variant=u3,
            initial_pump=pump,
            theta=theta,
            phi=phi,
            theta_r=theta_r,
            out=str(out) if out else None,
        )
        snapshots = init_sequence_snapshots(parse_hybrid_input(input_state), cfg.u3_variant, cfg.initial_pump)
        target = hybrid_index(0, 0)
        init = [
            {
                "step": name,
                "population_00": float(np.real(rho[target, target])),
                "trace": float(np.real(np.trace(rho))),
                "rho": DensityMatrixModel.from_array(rho),
            }
            for name, rho in snapshots
        ]
        nuclear = [
            {"step": name, "ket": ket_dict(psi)}
            for name, psi in nuclear_sequence_states(cfg.state(), math.radians(cfg.theta_r))
        ]
        if not dump_states:
            init, nuclear = init[-1:], nuclear[-1:]

        emit(
            to_json(
                {
                    "basis": list(HYBRID_LABELS),
                    "u3_variant": cfg.u3_variant,
                    "initial_pump": cfg.initial_pump,
                    "init_sequence": init,
                    "nuclear_sequence": nuclear,
                }
            ),
            cfg.out,
        )
        err_console.print(f"⟨0,0|ρ|0,0⟩ after initialisation: {init[-1]['population_00']:.12f}")


if __name__ == "__main__":
    app()
