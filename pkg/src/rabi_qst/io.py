"""Reading and writing traces and analysis results."""

import csv
import io
import json
import math
from pathlib import Path
from typing import Any, Optional, Sequence

from pydantic import BaseModel, ValidationError

from rabi_qst.errors import ConfigError
from rabi_qst.models import MonteCarloResult, OctantRow, RabiTrace, SweepResult

TRACE_HEADER = ("time_us", "signal")


def fmt(value: Optional[float]) -> str:
    """Round-trip float formatting; empty for missing values."""
    return "" if value is None else "%.17g" % value


def jsonable(obj: Any) -> Any:
    if isinstance(obj, BaseModel):
        return obj.model_dump(mode="json")
    if isinstance(obj, dict):
        return {k: jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    return obj


def to_json(obj: Any) -> str:
    return json.dumps(jsonable(obj), indent=2, ensure_ascii=False) + "\n"


def write_text(path: Path, text: str) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text, encoding="utf-8", newline="\n")
    return path


def write_json(obj: Any, path: Path) -> Path:
    return write_text(path, to_json(obj))


def csv_text(header: Sequence[str], rows: Sequence[Sequence[str]]) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    return buffer.getvalue()


# Traces
def trace_csv(trace: RabiTrace) -> str:
    return csv_text(TRACE_HEADER, [(fmt(t), fmt(y)) for t, y in zip(trace.times, trace.signal)])


def write_trace(trace: RabiTrace, path: Path) -> Path:
    """Write a trace as CSV or JSON depending on the suffix."""
    path = Path(path)
    if path.suffix == ".json":
        return write_text(path, trace.model_dump_json(indent=2) + "\n")
    return write_text(path, trace_csv(trace))


def read_trace(path: Path, label: Optional[str] = None) -> RabiTrace:
    """Read a trace written by write_trace (CSV `time_us,signal` or JSON)."""
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"trace file not found: {path}")
    try:
        text = path.read_text(encoding="utf-8")
    except UnicodeDecodeError as e:
        raise ConfigError(f"{path}: cannot decode trace as UTF-8 ({e})") from e
    if path.suffix == ".json":
        try:
            trace = RabiTrace.model_validate_json(text)
        except ValidationError as e:
            raise ConfigError(f"{path}: cannot parse trace ({e})") from e
        return trace.model_copy(update={"label": label}) if label else trace

    rows = list(csv.reader(io.StringIO(text)))
    if not rows or tuple(h.strip() for h in rows[0]) != TRACE_HEADER:
        raise ConfigError(f"{path}: expected header {','.join(TRACE_HEADER)}")
    body = [r for r in rows[1:] if r]
    try:
        return RabiTrace(
            label=label or path.stem,
            times=[float(r[0]) for r in body],
            signal=[float(r[1]) for r in body],
            meta={"source": path.name},
        )
    except (ValidationError, ValueError, IndexError) as e:
        raise ConfigError(f"{path}: cannot parse trace ({e})") from e


# Analysis outputs
def sweep_csv(result: SweepResult) -> str:
    if result.spec.perturbation_mode == "both-signs":
        rows = []
        for theta, plus, minus in zip(result.theta_deg, result.fidelity_plus, result.fidelity_minus):
            rows.append((fmt(theta), fmt(plus), "+"))
            rows.append((fmt(theta), fmt(minus), "-"))
        return csv_text(("theta_deg", "fidelity", "sign"), rows)
    return csv_text(("theta_deg", "fidelity"), [(fmt(t), fmt(f)) for t, f in zip(result.theta_deg, result.fidelity)])


def monte_carlo_csv(result: MonteCarloResult) -> str:
    methods = list(result.stats)
    header = ("index", "theta_deg", "phi_deg", *(f"fidelity_{m}" for m in methods))
    rows = [
        (
            str(r.index),
            fmt(math.degrees(r.theta)),
            fmt(math.degrees(r.phi)),
            *(fmt(r.fidelity[m]) for m in methods),
        )
        for r in result.records
    ]
    return csv_text(header, rows)


def octant_csv(rows: Sequence[OctantRow]) -> str:
    return csv_text(
        ("label", "path", "theta_deg", "phi_deg", "method", "fidelity", "signs_match", "passed"),
        [
            (
                r.label,
                r.path,
                fmt(r.theta_deg),
                fmt(r.phi_deg),
                r.method,
                fmt(r.fidelity),
                "" if r.signs_match is None else str(r.signs_match).lower(),
                str(r.passed).lower(),
            )
            for r in rows
        ],
    )
