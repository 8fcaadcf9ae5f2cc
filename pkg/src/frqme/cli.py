"""Batch front-end.

    frqme <command> --config run.json [--out PATH] [--format csv|json] [--threads N]

Commands: simulate, fidelity-scan, optimize, r3-verify, feasibility. The config
is a single JSON object; unknown keys are rejected. Exit codes: 0 success,
1 configuration error, 2 numerical failure.
"""
from __future__ import annotations

import argparse
import json
import logging
import math
import os
import sys
from pathlib import Path

import numpy as np

from . import fidelity, gates, optimizer, propagator
from .errors import FrqmeError, NumericalFailure
from .liouvillian import FRQME, DidKind, DidModel
from .states import SIGMA_Z, DensityMatrix, SystemParams, pseudopure_state

log = logging.getLogger("frqme")

COMMANDS = ("simulate", "fidelity-scan", "optimize", "r3-verify", "feasibility")
VALIDITY_LIMIT = 0.1  # omega1 * tau_c above which the master equation is flagged as out of regime


class ConfigError(Exception):
    def __init__(self, message: str, field: str | None = None, line: int | None = None):
        self.field = field
        self.line = line
        where = []
        if line is not None:
            where.append(f"line {line}")
        if field is not None:
            where.append(f"field '{field}'")
        super().__init__(f"{', '.join(where)}: {message}" if where else message)


# ---------------------------------------------------------------- config parsing

class _Config:
    """Typed accessors over one JSON object of the config, with field paths for errors."""

    def __init__(self, data: dict, text: str, path: str = ""):
        self.data = data
        self.text = text
        self.path = path

    def line_of(self, key: str) -> int | None:
        needle = json.dumps(key)
        pos = self.text.find(needle + ":")
        if pos < 0:
            pos = self.text.find(needle)
        return self.text.count("\n", 0, pos) + 1 if pos >= 0 else None

    def error(self, message: str, key: str) -> ConfigError:
        return ConfigError(message, field=self.path + key, line=self.line_of(key.rsplit(".", 1)[-1]))

    def sub(self, key: str, required: bool = True) -> "_Config | None":
        value = self.data.get(key)
        if value is None:
            if required:
                raise self.error("missing section", key)
            return None
        if not isinstance(value, dict):
            raise self.error("expected an object", key)
        return _Config(value, self.text, f"{self.path}{key}.")

    def number(self, key: str, default=None, required: bool = True) -> float | None:
        if key not in self.data:
            if default is not None or not required:
                return default
            raise self.error("missing value", key)
        value = self.data[key]
        if isinstance(value, str) and value.strip().lower() in ("inf", "infinity"):
            return math.inf
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise self.error(f"expected a number, got {value!r}", key)
        return float(value)

    def string(self, key: str, choices, default=None) -> str:
        value = self.data.get(key, default)
        if value is None:
            raise self.error("missing value", key)
        if value not in choices:
            raise self.error(f"expected one of {list(choices)}, got {value!r}", key)
        return value

    def reject_unknown(self, allowed) -> None:
        for key in self.data:
            if key not in allowed:
                raise self.error("unknown field", key)


def _system(cfg: _Config) -> SystemParams:
    sec = cfg.sub("system")
    sec.reject_unknown({"T1", "T2", "m", "tau_c"})
    values = {k: sec.number(k) for k in ("T1", "T2", "m", "tau_c")}
    try:
        return SystemParams(**values)
    except FrqmeError as exc:
        raise ConfigError(str(exc), field="system") from exc


def _did(cfg: _Config) -> DidModel:
    sec = cfg.sub("did", required=False)
    if sec is None:
        return FRQME
    sec.reject_unknown({"kind", "t_tilde"})
    kind = DidKind(sec.string("kind", [k.value for k in DidKind], default="frqme"))
    try:
        return DidModel(kind, sec.number("t_tilde", required=kind is DidKind.GENERALIZED) or 0.0)
    except FrqmeError as exc:
        raise ConfigError(str(exc), field="did") from exc


def _gate(sec: _Config) -> gates.GateSpec:
    sec.reject_unknown({"kind", "omega1", "angle", "rotations"})
    kind = sec.string("kind", gates.GATE_KINDS)
    omega1 = sec.number("omega1")
    angle = sec.number("angle", required=kind in ("rx", "ry")) or 0.0
    rotations = sec.data.get("rotations", [])
    if kind == "custom":
        if not isinstance(rotations, list) or not all(
            isinstance(r, list) and len(r) == 2 and all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in r)
            for r in rotations
        ):
            raise sec.error("expected a list of [phi, flip_angle] pairs", "rotations")
    try:
        return gates.GateSpec(kind, omega1, angle=angle, rotations=tuple(map(tuple, rotations)))
    except FrqmeError as exc:
        raise ConfigError(str(exc), field=sec.path.rstrip(".")) from exc


def _initial_state(cfg: _Config, sys_params: SystemParams) -> DensityMatrix:
    sec = cfg.sub("initial_state", required=False)
    if sec is None:
        return pseudopure_state(sys_params.m)
    sec.reject_unknown({"pseudopure", "bloch"})
    try:
        if "bloch" in sec.data:
            bloch = sec.data["bloch"]
            if not (isinstance(bloch, list) and len(bloch) == 3
                    and all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in bloch)):
                raise sec.error("expected [x, y, z]", "bloch")
            return DensityMatrix.from_bloch(*map(float, bloch))
        return pseudopure_state(sec.number("pseudopure"))
    except FrqmeError as exc:
        raise ConfigError(str(exc), field="initial_state") from exc


def load_pulse_file(path: Path) -> tuple[np.ndarray, np.ndarray, np.ndarray | None]:
    """Read ``time, amplitude[, phase]`` rows; ``#`` starts a comment, commas or whitespace separate."""
    rows = []
    for raw in path.read_text().splitlines():
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        rows.append([float(v) for v in line.replace(",", " ").split()])
    if not rows or len({len(r) for r in rows}) != 1 or len(rows[0]) not in (2, 3):
        raise ValueError("pulse file needs 2 or 3 numeric columns on every row")
    data = np.array(rows)
    return data[:, 0], data[:, 1], (data[:, 2] if data.shape[1] == 3 else None)


def _shaped(cfg: _Config, base: Path) -> tuple[propagator.ShapedPulse, propagator.StepControl]:
    sec = cfg.sub("pulse")
    sec.reject_unknown({"file", "phase", "dt", "richardson_check"})
    fname = sec.data.get("file")
    if not isinstance(fname, str):
        raise sec.error("expected a file path", "file")
    path = (base / fname) if not os.path.isabs(fname) else Path(fname)
    if not path.is_file():
        raise sec.error(f"file not found: {path}", "file")
    try:
        times, amps, phases = load_pulse_file(path)
    except ValueError as exc:
        raise sec.error(str(exc), "file") from exc
    phase = phases if phases is not None else sec.number("phase", default=0.0)
    check = sec.data.get("richardson_check", False)
    if not isinstance(check, bool):
        raise sec.error("expected true or false", "richardson_check")
    try:
        pulse = propagator.ShapedPulse.from_samples(times, amps, phase)
        return pulse, propagator.StepControl(sec.number("dt"), check)
    except FrqmeError as exc:
        raise ConfigError(str(exc), field="pulse") from exc


def _axis(sec: _Config, key: str, log_default: bool) -> np.ndarray:
    value = sec.data.get(key)
    if isinstance(value, list):
        if not value or not all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in value):
            raise sec.error("expected a non-empty list of numbers", key)
        return np.array(value, dtype=float)
    ax = sec.sub(key)
    ax.reject_unknown({"start", "stop", "num", "log"})
    start, stop, num = ax.number("start"), ax.number("stop"), ax.number("num")
    if num != int(num) or num < 1:
        raise ax.error("expected a positive integer", "num")
    use_log = ax.data.get("log", log_default)
    if use_log:
        if start <= 0 or stop <= 0:
            raise ax.error("log-spaced axis needs positive bounds", "start")
        return np.logspace(math.log10(start), math.log10(stop), int(num))
    return np.linspace(start, stop, int(num))


COMMON = {"command", "output", "format"}
ALLOWED = {
    "simulate": COMMON | {"system", "did", "gate", "pulse", "initial_state"},
    "fidelity-scan": COMMON | {"grid"},
    "optimize": COMMON | {"system", "did", "m", "method"},
    "r3-verify": COMMON | {"system", "did", "omega1", "initial_state"},
    "feasibility": COMMON | {"system", "did", "J"},
}


def parse_config(text: str, command: str | None = None) -> _Config:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"invalid JSON: {exc.msg}", line=exc.lineno) from exc
    if not isinstance(data, dict):
        raise ConfigError("config must be a JSON object", line=1)
    cfg = _Config(data, text)
    if command is None:
        command = cfg.string("command", COMMANDS)
    elif "command" in data and data["command"] != command:
        raise cfg.error(f"config is for {data['command']!r}, not {command!r}", "command")
    cfg.data = {**data, "command": command}
    cfg.reject_unknown(ALLOWED[command])
    return cfg


# ---------------------------------------------------------------- commands

def _warn_regime(omega1: float, sys_params: SystemParams, did: DidModel) -> None:
    tau = did.timescale(sys_params)
    if omega1 * tau > VALIDITY_LIMIT:
        log.warning(
            "omega1*tau = %.3g exceeds %g; the master equation assumes a drive slow on the fluctuation timescale",
            omega1 * tau,
            VALIDITY_LIMIT,
        )


def _complex(z) -> list[float]:
    return [float(z.real), float(z.imag)]


def cmd_simulate(cfg: _Config, base: Path) -> dict:
    sys_params, did = _system(cfg), _did(cfg)
    if ("gate" in cfg.data) == ("pulse" in cfg.data):
        raise ConfigError("give exactly one of 'gate' or 'pulse'", field="gate")
    rho0 = _initial_state(cfg, sys_params)
    result: dict = {"command": "simulate"}
    with propagator.conservation_monitor() as mon:
        if "gate" in cfg.data:
            gate = _gate(cfg.sub("gate"))
            _warn_regime(gate.omega1, sys_params, did)
            seq = gates.compile_gate(gate)
            rho = propagator.propagate_sequence(rho0, seq, sys_params, did)
            target = gates.apply_ideal(gate, rho0)
            result["duration"] = seq.total_duration
            result["fidelity_to_ideal"] = fidelity.uhlmann_fidelity(target, rho)
        else:
            pulse, ctl = _shaped(cfg, base)
            grid = np.linspace(0.0, pulse.duration, 1001)
            _warn_regime(max(pulse.drive_at(t).omega1 for t in grid), sys_params, did)
            rho, diff = propagator.propagate_shaped_checked(rho0, pulse, sys_params, did, ctl)
            result["duration"] = pulse.duration
            if diff is not None:
                result["richardson_difference"] = diff
    v = rho.matrix.reshape(4)
    result["rho"] = [_complex(z) for z in v]
    result["bloch"] = [float(b) for b in rho.bloch]
    result["diagnostics"] = {
        "trace_error": mon.max_trace_error,
        "hermiticity_drift": mon.max_hermiticity_drift,
        "min_eigenvalue": float(rho.eigenvalues()[0]),
        "purity": rho.purity(),
    }
    return result


def cmd_fidelity_scan(cfg: _Config, threads: int | None) -> optimizer.ContourGrid:
    sec = cfg.sub("grid", required=False) or _Config({}, cfg.text, "grid.")
    sec.reject_unknown({"beta", "x", "m"})
    default_beta, default_x = optimizer.default_axes()
    betas = _axis(sec, "beta", False) if "beta" in sec.data else default_beta
    xs = _axis(sec, "x", True) if "x" in sec.data else default_x
    m = sec.number("m", default=0.1)
    try:
        return optimizer.contour_grid(betas, xs, m, workers=threads)
    except FrqmeError as exc:
        raise ConfigError(str(exc), field="grid") from exc


def cmd_optimize(cfg: _Config) -> dict:
    sys_params, did = _system(cfg), _did(cfg)
    m = cfg.number("m", default=sys_params.m)
    method = cfg.string("method", optimizer.METHODS, default="closed_form")
    if not 0 < m <= 1:
        raise cfg.error(f"must lie in (0, 1], got {m!r}", "m")
    try:
        optimizer.omega1_opt(sys_params, did)
    except FrqmeError as exc:
        raise ConfigError(str(exc), field="system") from exc
    res = optimizer.optimize_drive(sys_params, m, method, did)
    _warn_regime(res.omega1_opt_numeric, sys_params, did)
    return {
        "command": "optimize",
        "method": res.method,
        "omega1_opt_analytic": res.omega1_opt_analytic,
        "omega1_opt_numeric": res.omega1_opt_numeric,
        "f_max": res.f_max,
        "beta": res.beta,
    }


def cmd_r3_verify(cfg: _Config) -> dict:
    sys_params, did = _system(cfg), _did(cfg)
    omega1 = cfg.number("omega1")
    if not omega1 > 0:
        raise cfg.error("must be > 0", "omega1")
    initial = _initial_state(cfg, sys_params)
    _warn_regime(omega1, sys_params, did)
    if initial.expect(SIGMA_Z) == 0:
        raise ConfigError("initial state has no z-magnetization", field="initial_state")
    ratio, closed = gates.r3_block_decay(omega1, sys_params, initial, did)
    return {
        "command": "r3-verify",
        "omega1": omega1,
        "block_duration": 4 * math.pi / omega1,
        "mz_ratio": ratio,
        "closed_form": closed,
        "relative_error": abs(ratio - closed) / closed,
    }


def cmd_feasibility(cfg: _Config) -> dict:
    sys_params, did = _system(cfg), _did(cfg)
    J = cfg.number("J")
    try:
        ok, w = optimizer.multiqubit_feasibility(sys_params, J, did)
    except FrqmeError as exc:
        raise ConfigError(str(exc), field="J") from exc
    return {"command": "feasibility", "feasible": ok, "omega1_opt": w, "J": J}


# ---------------------------------------------------------------- output

def fmt(x: float) -> str:
    """17 significant digits; round-trips every double."""
    if math.isnan(x):
        return "NaN"
    if math.isinf(x):
        return "Infinity" if x > 0 else "-Infinity"
    return format(x, ".17g")


def to_json(obj, indent: int = 0) -> str:
    pad, inner = "  " * indent, "  " * (indent + 1)
    if isinstance(obj, bool) or obj is None:
        return json.dumps(obj)
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return fmt(float(obj))
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{inner}{json.dumps(k)}: {to_json(v, indent + 1)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + pad + "}"
    if isinstance(obj, (list, tuple, np.ndarray)):
        seq = list(obj)
        if all(not isinstance(v, (dict, list, tuple, np.ndarray)) for v in seq):
            return "[" + ", ".join(to_json(v) for v in seq) + "]"
        return "[\n" + ",\n".join(inner + to_json(v, indent + 1) for v in seq) + "\n" + pad + "]"
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def grid_to_csv(grid: optimizer.ContourGrid) -> str:
    lines = [",".join(["beta\\x"] + [fmt(x) for x in grid.x_axis])]
    for b, row in zip(grid.beta_axis, grid.f_values):
        lines.append(",".join([fmt(b)] + [fmt(v) for v in row]))
    return "\n".join(lines) + "\n"


def grid_to_dict(grid: optimizer.ContourGrid) -> dict:
    return {
        "command": "fidelity-scan",
        "m": grid.m,
        "beta": grid.beta_axis,
        "x": grid.x_axis,
        "f": [list(row) for row in grid.f_values],
    }


def _flatten(obj, prefix=""):
    if isinstance(obj, dict):
        for k, v in obj.items():
            yield from _flatten(v, f"{prefix}{k}.")
    elif isinstance(obj, list):
        for i, v in enumerate(obj):
            yield from _flatten(v, f"{prefix}{i}.")
    else:
        yield prefix.rstrip("."), obj


def dict_to_csv(result: dict) -> str:
    lines = ["key,value"]
    for key, value in _flatten(result):
        if isinstance(value, bool):
            text = "true" if value else "false"
        elif isinstance(value, float):
            text = fmt(value)
        else:
            text = str(value)
        lines.append(f"{key},{text}")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------- entry point

def _threads(arg: int | None) -> int | None:
    if arg is not None:
        return arg
    env = os.environ.get("FRQME_THREADS")
    if env:
        try:
            return int(env)
        except ValueError:
            raise ConfigError(f"FRQME_THREADS must be an integer, got {env!r}")
    return None


def run(command: str, config_path: str, out: str | None = None, fmt_name: str | None = None,
        threads: int | None = None) -> int:
    """Execute one command; returns the process exit status."""
    try:
        path = Path(config_path)
        if not path.is_file():
            raise ConfigError(f"config file not found: {config_path}")
        cfg = parse_config(path.read_text(), command)
        default_fmt = "csv" if command == "fidelity-scan" else "json"
        fmt_name = fmt_name or cfg.string("format", ("csv", "json"), default=default_fmt)
        out = out or cfg.data.get("output")
        if out is not None and not isinstance(out, str):
            raise cfg.error("expected a path", "output")
        nthreads = _threads(threads)
        if nthreads is not None and nthreads < 1:
            raise ConfigError(f"thread count must be >= 1, got {nthreads}")

        if command == "simulate":
            result = cmd_simulate(cfg, path.parent)
        elif command == "fidelity-scan":
            result = cmd_fidelity_scan(cfg, nthreads)
        elif command == "optimize":
            result = cmd_optimize(cfg)
        elif command == "r3-verify":
            result = cmd_r3_verify(cfg)
        else:
            result = cmd_feasibility(cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except NumericalFailure as exc:
        print(f"numerical failure ({type(exc).__name__}): {exc}", file=sys.stderr)
        return 2
    except FrqmeError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1

    if isinstance(result, optimizer.ContourGrid):
        text = grid_to_csv(result) if fmt_name == "csv" else to_json(grid_to_dict(result)) + "\n"
    else:
        text = dict_to_csv(result) if fmt_name == "csv" else to_json(result) + "\n"
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)
    return 0


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        # usage errors are configuration errors; exit code 2 is reserved for numerical failures
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


class _StderrHandler(logging.StreamHandler):
    """Writes to whatever ``sys.stderr`` is at emit time."""

    @property
    def stream(self):
        return sys.stderr

    @stream.setter
    def stream(self, _):
        pass


def _configure_logging() -> None:
    if not any(isinstance(h, _StderrHandler) for h in log.handlers):
        handler = _StderrHandler()
        handler.setFormatter(logging.Formatter("%(levelname)s: %(message)s"))
        log.addHandler(handler)
        log.setLevel(logging.WARNING)
        log.propagate = False


def main(argv=None) -> int:
    parser = _Parser(prog="frqme", description="Single-qubit gates under drive-induced decoherence.")
    parser.add_argument("command", choices=COMMANDS)
    parser.add_argument("--config", required=True, help="JSON run configuration")
    parser.add_argument("--out", help="output file (default: stdout)")
    parser.add_argument("--format", choices=("csv", "json"), dest="fmt")
    parser.add_argument("--threads", type=int, help="worker threads for fidelity-scan (fallback: $FRQME_THREADS)")
    args = parser.parse_args(argv)
    _configure_logging()
    return run(args.command, args.config, args.out, args.fmt, args.threads)


if __name__ == "__main__":
    sys.exit(main())
