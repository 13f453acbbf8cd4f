"""Command-line runner: ``nsmild <kind> --config <path> [--out <dir>] [--seed <int>] [--format csv|json]``.

Configurations are flat TOML files with dotted keys (``grid.points = 32``).
Reports are written as CSV or JSON together with two-column plot series, and
the exit code is 0 exactly when every check passes.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import math
import struct
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import tomli

from .checks import KIND_CHECKS, CheckResult, RunContext, run_check
from .errors import DomainError, InvalidFieldError, NsmildError
from .field_core import GridSpec, VectorField

log = logging.getLogger(__name__)

KINDS = tuple(KIND_CHECKS)
FORMATS = ("csv", "json")
CSV_COLUMNS = ("check_id", "paper_anchor", "value", "target", "pass", "tolerance", "runtime_s")
SNAPSHOT_MAGIC = "NSMILD1"

# Defaults reproduce the acceptance settings.
DEFAULTS: dict = {
    "experiment.kind": "all",
    "experiment.seed": 0,
    "experiment.out_dir": "nsmild-out",
    "experiment.format": "csv",
    "report.timing": False,
    "grid.points": 32,
    "grid.length": 2 * math.pi,
    "grid.dim": 3,
    "solver.step": 1 / 256,
    "solver.final_time": 0.5,
    "solver.scheme": "exponential_trapezoid",
    "solver.nonlinear": True,
    "solver.inner_tolerance": 1e-10,
    "operators.fields": 100,
    "operators.tol": 1e-10,
    "heat.final_time": 1.0,
    "heat.step": 1 / 64,
    "heat.tol": 1e-10,
    "duhamel.factor": 10.0,
    "duhamel.halving_band": 0.2,
    "weak.fine_points": 48,
    "weak.fine_step": 1 / 384,
    "weak.times": [0.25, 0.5],
    "weak.chi_r": [0.1, 1.0],
    "weak.stability": 2.0,
    "kato.points": 48,
    "kato.q_points": 32,
    "kato.length": 8.0,
    "kato.R": 1.0,
    "kato.R0": 0.3,
    "kato.sigma": 0.4,
    "kato.samples": 20,
    "kato.tol": 1e-6,
    "kernels.dims": [3, 4, 5],
    "kernels.r": [0.0, 0.5, 0.9],
    "kernels.t": [0.0, 1.0],
    "kernels.w_max": 50.0,
    "kernels.w_step": 0.25,
    "kernels.argmax_limit": 5.0,
    "kernels.tol": 1e-10,
    "bessel.orders": [0.25, 0.5, 0.75],
    "translation.r": [0.25, 0.5, 0.75, 1.0, 1.5, 2.0],
    "translation.slope_tol": 0.05,
    "smoothing.epsilons": [0.25, 0.5, 1.0],
    "smoothing.fields": 20,
    "holder.step": 1 / 1024,
    "holder.t": 0.25,
    "holder.offset_exponents": [4, 5, 6, 7, 8, 9],
    "holder.spatial_exponents": [2, 3, 4, 5, 6, 7],
    "holder.monotone_slack": 0.05,
    "holder.growth_limit": 100.0,
    "holder.time_stride": 8,
    "holder.interp_samples": 100,
    "sweeps.r": [0.0, 0.3, 0.6, 0.9],
    "sweeps.p": [1.0],
    "sweeps.t": [0.125, 0.25, 0.5],
    "sweeps.h": [0.1, 0.01, 0.001],
    "sweeps.lambda": [2.0**-j for j in range(1, 11)],
    "sweeps.seeds": list(range(20)),
}


# ---------------------------------------------------------------- configuration


def _flatten(table: dict, prefix: str = "") -> dict:
    out = {}
    for key, value in table.items():
        name = f"{prefix}{key}"
        if isinstance(value, dict):
            out.update(_flatten(value, name + "."))
        else:
            out[name] = value
    return out


def _coerce(key: str, value, default):
    """Match the default's type; ints are accepted where floats are expected."""
    if isinstance(default, bool):
        if not isinstance(value, bool):
            raise DomainError(f"{key} must be true or false")
        return value
    if isinstance(default, int):
        if isinstance(value, bool) or not isinstance(value, int):
            raise DomainError(f"{key} must be an integer")
        return value
    if isinstance(default, float):
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise DomainError(f"{key} must be a number")
        return float(value)
    if isinstance(default, str):
        if not isinstance(value, str):
            raise DomainError(f"{key} must be a string")
        return value
    if isinstance(default, list):
        if not isinstance(value, list):
            raise DomainError(f"{key} must be a list")
        if default and isinstance(default[0], float):
            return [float(v) for v in value]
        return list(value)
    return value


@dataclass
class ExperimentConfig:
    """Flat dotted-key parameters over :data:`DEFAULTS`."""

    params: dict = field(default_factory=dict)

    def __post_init__(self):
        merged = dict(DEFAULTS)
        for key, value in self.params.items():
            if key not in DEFAULTS:
                raise DomainError(f"unknown configuration key {key!r}")
            merged[key] = _coerce(key, value, DEFAULTS[key])
        self.params = merged
        self.validate()

    def get(self, key: str, default=None):
        return self.params.get(key, default)

    @property
    def kind(self) -> str:
        return self.params["experiment.kind"]

    @property
    def seed(self) -> int:
        return self.params["experiment.seed"]

    def replace(self, **updates) -> "ExperimentConfig":
        """Copy with dotted keys given as ``section__name=value``."""
        params = dict(self.params)
        params.update({k.replace("__", "."): v for k, v in updates.items()})
        return ExperimentConfig(params)

    def validate(self):
        p = self.params
        if p["experiment.kind"] not in KINDS:
            raise DomainError(f"experiment.kind must be one of {KINDS}")
        if p["experiment.format"] not in FORMATS:
            raise DomainError(f"experiment.format must be one of {FORMATS}")
        GridSpec(p["grid.points"], p["grid.length"], p["grid.dim"])
        GridSpec(p["weak.fine_points"], p["grid.length"], p["grid.dim"])
        for key in ("solver.step", "solver.final_time", "heat.step", "heat.final_time", "holder.step", "weak.fine_step"):
            if not p[key] > 0:
                raise DomainError(f"{key} must be positive")
        for key in ("solver.step", "holder.step", "weak.fine_step"):
            if not _divides(p[key], p["solver.final_time"]):
                raise DomainError(f"solver.final_time must be a multiple of {key}")
        if not _divides(p["heat.step"], p["heat.final_time"]):
            raise DomainError("heat.final_time must be a multiple of heat.step")
        if any(not 0 <= r < 1 for r in p["sweeps.r"]):
            raise DomainError("sweeps.r entries must lie in [0, 1)")
        if any(not 0 < x <= 1 for x in p["sweeps.lambda"]):
            raise DomainError("sweeps.lambda entries must lie in (0, 1]")
        if any(h < 0 for h in p["sweeps.h"]):
            raise DomainError("sweeps.h entries must be >= 0")
        if any(not 0 < e <= 1 for e in p["smoothing.epsilons"]):
            raise DomainError("smoothing.epsilons entries must lie in (0, 1]")
        if any(not 0 <= t <= p["solver.final_time"] for t in p["sweeps.t"] + p["weak.times"] + [p["holder.t"]]):
            raise DomainError("sweep times must lie inside [0, solver.final_time]")
        if any(r <= 0 for r in p["weak.chi_r"]):
            raise DomainError("weak.chi_r entries must be positive")

    # serialisation -----------------------------------------------------

    @classmethod
    def from_toml(cls, text: str) -> "ExperimentConfig":
        try:
            data = tomli.loads(text)
        except tomli.TOMLDecodeError as exc:
            raise DomainError(f"malformed configuration: {exc}") from exc
        return cls(_flatten(data))

    @classmethod
    def load(cls, path) -> "ExperimentConfig":
        return cls.from_toml(Path(path).read_text())

    def to_toml(self) -> str:
        """One ``section.key = value`` line per parameter, sorted by key."""
        return "".join(f"{key} = {_toml_value(self.params[key])}\n" for key in sorted(self.params))


def _divides(step: float, total: float) -> bool:
    ratio = total / step
    return abs(ratio - round(ratio)) <= 1e-9 * ratio


def _toml_value(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, int):
        return str(value)
    if isinstance(value, float):
        if math.isinf(value):
            return "inf" if value > 0 else "-inf"
        if math.isnan(value):
            return "nan"
        return repr(value)
    if isinstance(value, str):
        return json.dumps(value)
    if isinstance(value, list):
        return "[" + ", ".join(_toml_value(v) for v in value) + "]"
    raise DomainError(f"cannot serialise {value!r}")


# ---------------------------------------------------------------- report


@dataclass
class VerificationReport:
    kind: str
    seed: int
    checks: list[CheckResult] = field(default_factory=list)

    @property
    def summary(self) -> dict:
        passed = sum(1 for c in self.checks if c.passed)
        return {"total": len(self.checks), "passed": passed, "failed": len(self.checks) - passed}

    @property
    def all_passed(self) -> bool:
        return all(c.passed for c in self.checks)


def _num(x) -> str:
    return repr(float(x))


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return x if math.isfinite(x) else repr(x)
    return obj


def report_csv(report: VerificationReport) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for c in report.checks:
        writer.writerow([c.check_id, c.anchor, _num(c.value), _num(c.target), str(bool(c.passed)).lower(), _num(c.tolerance), _num(c.runtime_s)])
    return buf.getvalue()


def report_json(report: VerificationReport) -> str:
    doc = {
        "kind": report.kind,
        "seed": report.seed,
        "summary": report.summary,
        "checks": [
            {
                "check_id": c.check_id,
                "paper_anchor": c.anchor,
                "value": c.value,
                "target": c.target,
                "pass": bool(c.passed),
                "tolerance": c.tolerance,
                "runtime_s": c.runtime_s,
                "error": c.error,
                "details": c.details,
                "series": {name: {"x": x, "y": y} for name, (x, y) in sorted(c.series.items())},
            }
            for c in report.checks
        ],
    }
    return json.dumps(_jsonable(doc), indent=2, sort_keys=False) + "\n"


def series_csv(x, y) -> str:
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape or x.ndim != 1:
        raise DomainError("plot series need matching one-dimensional abscissa and ordinate")
    return "".join(f"{_num(a)},{_num(b)}\n" for a, b in zip(x, y))


def emit_report(report: VerificationReport, fmt: str, out_dir) -> list[Path]:
    """Write report.csv or report.json plus one two-column CSV per plot series."""
    if fmt not in FORMATS:
        raise DomainError(f"format must be one of {FORMATS}")
    out = Path(out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
        written = []
        path = out / f"report.{fmt}"
        path.write_text(report_csv(report) if fmt == "csv" else report_json(report))
        written.append(path)
        series_dir = out / "series"
        for c in report.checks:
            for name, (x, y) in sorted(c.series.items()):
                series_dir.mkdir(exist_ok=True)
                sp = series_dir / f"{name}.csv"
                sp.write_text(series_csv(x, y))
                written.append(sp)
    except OSError as exc:
        raise NsmildError(f"cannot write report to {out}: {exc}") from exc
    return written


# ---------------------------------------------------------------- snapshots


def write_snapshot(path, f: VectorField):
    """Header line ``NSMILD1 m N L`` then the components as little-endian float64, row-major."""
    g = f.grid
    header = f"{SNAPSHOT_MAGIC} {g.dim} {g.points} {g.length!r}\n".encode("ascii")
    body = np.ascontiguousarray(f.components, dtype="<f8").tobytes()
    Path(path).write_bytes(header + body)


def read_snapshot(path) -> VectorField:
    data = Path(path).read_bytes()
    nl = data.find(b"\n")
    if nl < 0:
        raise InvalidFieldError("snapshot has no header line")
    parts = data[:nl].decode("ascii", errors="replace").split()
    if len(parts) != 4 or parts[0] != SNAPSHOT_MAGIC:
        raise InvalidFieldError("not an NSMILD1 snapshot")
    m, N, L = int(parts[1]), int(parts[2]), float(parts[3])
    grid = GridSpec(N, L, m)
    body = data[nl + 1 :]
    expected = m * N**m * struct.calcsize("<d")
    if len(body) != expected:
        raise InvalidFieldError(f"snapshot body has {len(body)} bytes, expected {expected}")
    arr = np.frombuffer(body, dtype="<f8").reshape((m,) + grid.shape)
    return VectorField(grid, arr.astype(float))


# ---------------------------------------------------------------- runner


def checks_for(cfg: ExperimentConfig) -> tuple[str, ...]:
    ids = KIND_CHECKS[cfg.kind]
    if not cfg.get("solver.nonlinear"):
        # with the nonlinearity off there is no Duhamel integral to test
        ids = tuple(i for i in ids if i != "duhamel_consistency")
    return ids


def run_experiment(cfg: ExperimentConfig, out_dir=None, fmt: str | None = None) -> VerificationReport:
    """Run every check of the configured kind.  When ``out_dir`` is given the
    report is rewritten after each check so a failure leaves a partial report."""
    ctx = RunContext(cfg)
    report = VerificationReport(cfg.kind, cfg.seed)
    timing = bool(cfg.get("report.timing"))
    fmt = fmt or cfg.get("experiment.format")
    for check_id in checks_for(cfg):
        log.info("running %s", check_id)
        res = run_check(check_id, ctx, timing)
        report.checks.append(res)
        if res.error:
            log.error("%s failed: %s", check_id, res.error)
        if out_dir is not None:
            emit_report(report, fmt, out_dir)
    if out_dir is not None and cfg.kind == "simulate":
        traj = ctx.trajectory()
        write_snapshot(Path(out_dir) / "final_state.nsmild", traj.states[-1])
    return report


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="nsmild", description="Mild-solution verification runner.")
    p.add_argument("kind", choices=KINDS)
    p.add_argument("--config", required=True, help="flat TOML configuration file")
    p.add_argument("--out", default=None, help="output directory (default: experiment.out_dir)")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--format", choices=FORMATS, default=None)
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        cfg = ExperimentConfig.load(args.config)
        updates = {"experiment__kind": args.kind}
        if args.seed is not None:
            updates["experiment__seed"] = args.seed
        if args.format is not None:
            updates["experiment__format"] = args.format
        cfg = cfg.replace(**updates)
    except (OSError, NsmildError) as exc:
        print(f"nsmild: {exc}", file=sys.stderr)
        return 2
    out_dir = args.out or cfg.get("experiment.out_dir")
    fmt = cfg.get("experiment.format")
    try:
        report = run_experiment(cfg, out_dir, fmt)
        emit_report(report, fmt, out_dir)
    except NsmildError as exc:
        print(f"nsmild: {exc}", file=sys.stderr)
        return 2
    for c in report.checks:
        status = "PASS" if c.passed else "FAIL"
        extra = f"  ({c.error})" if c.error else ""
        print(f"{status} {c.check_id}: value={c.value:.6g} target={c.target:.6g}{extra}")
    s = report.summary
    print(f"{s['passed']}/{s['total']} checks passed")
    return 0 if report.all_passed else 1


if __name__ == "__main__":
    sys.exit(main())
