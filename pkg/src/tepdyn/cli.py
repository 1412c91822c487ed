"""Command-line entry point.

Subcommands::

    tepdyn simulate --config run.json --out outdir
    tepdyn verify [--suite <id>]... --report report.json
    tepdyn sweep --config sweep.json --out outdir

Configs are strict JSON: unknown keys are rejected and physical
parameters have no defaults (integrator options do).  Trajectory CSVs
use 17-significant-digit formatting and LF line endings so values
round-trip exactly; reports and diagnostics are UTF-8 JSON.

Exit codes: 0 success, 2 configuration error (no output files written),
3 runtime physics error (diagnostics still written).  Sweeps run points
concurrently (capped by the THREADS environment variable), keep going
past failed points, and write the index last.
"""

from __future__ import annotations

import argparse
import itertools
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import List, Optional

import numpy as np

from . import continuum1d as c1
from .dynamics import IntegratorOptions, Trajectory, integrate
from .errors import ConfigError, TepdynError
from .model import BUILTIN_SYSTEMS, State, build_system
from .verify import SUITE_IDS, run_suites

__all__ = ["main"]

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_RUNTIME = 3


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def _require_keys(obj: dict, required: set, optional: set, where: str):
    if not isinstance(obj, dict):
        raise ConfigError(f"{where} must be a JSON object")
    unknown = set(obj) - required - optional
    if unknown:
        raise ConfigError(f"unknown keys in {where}: {sorted(unknown)}")
    missing = required - set(obj)
    if missing:
        raise ConfigError(f"missing keys in {where}: {sorted(missing)}")


def _load_json(path: str) -> dict:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as err:
        raise ConfigError(f"cannot read config {path}: {err}") from err
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as err:
        raise ConfigError(f"config {path} is not valid JSON: {err}") from err
    if not isinstance(obj, dict):
        raise ConfigError(f"config {path} must hold a JSON object")
    return obj


def _integrator_options(obj: dict) -> tuple:
    """(IntegratorOptions, t_end) from the config's integrator block;
    everything but t_end has defaults."""
    _require_keys(
        obj,
        {"t_end"},
        {"method", "dt", "abs_tol", "rel_tol", "sample_stride", "balance_guard"},
        "integrator",
    )
    t_end = float(obj["t_end"])
    kwargs = {k: obj[k] for k in obj if k != "t_end"}
    if "dt" in kwargs:
        kwargs["dt"] = float(kwargs["dt"])
    try:
        return IntegratorOptions(**kwargs), t_end
    except (TepdynError, ValueError, TypeError) as err:
        raise ConfigError(f"bad integrator options: {err}") from err


def _parse_state(obj: dict, n: int) -> State:
    _require_keys(obj, {"x", "v"}, {"t"}, "initial_state")
    x = np.asarray(obj["x"], dtype=float)
    v = np.asarray(obj["v"], dtype=float)
    if x.shape != (n,) or v.shape != (n,):
        raise ConfigError(f"initial state must have {n} coordinate(s)")
    return State(x, v, float(obj.get("t", 0.0)))


def _parse_bar_config(params: dict) -> c1.BarConfig:
    _require_keys(
        params,
        {"n_nodes", "length", "rho0", "beta", "alpha", "m_exp", "density_law"},
        {"delta"},
        "parameters (bar)",
    )
    try:
        return c1.BarConfig(
            n_nodes=int(params["n_nodes"]),
            length=float(params["length"]),
            rho0=float(params["rho0"]),
            beta=float(params["beta"]),
            alpha=float(params["alpha"]),
            m_exp=float(params["m_exp"]),
            density_law=str(params["density_law"]),
            delta=float(params.get("delta", 1e-8)),
        )
    except TepdynError as err:
        raise ConfigError(f"bad bar parameters: {err}") from err


def _parse_bar_state(obj: dict, cfg: c1.BarConfig) -> c1.BarState:
    _require_keys(obj, {"kind"}, {"u", "w", "u_amp", "w_amp", "mode"}, "initial_state")
    kind = obj["kind"]
    if kind == "nodal":
        if "u" not in obj or "w" not in obj:
            raise ConfigError("nodal initial state needs u and w arrays")
        try:
            return c1.BarState(np.asarray(obj["u"], float), np.asarray(obj["w"], float))
        except TepdynError as err:
            raise ConfigError(f"bad nodal state: {err}") from err
    if kind == "sine":
        if "u_amp" not in obj or "w_amp" not in obj:
            raise ConfigError("sine initial state needs u_amp and w_amp")
        return c1.sine_bar_state(
            cfg, float(obj["u_amp"]), float(obj["w_amp"]), int(obj.get("mode", 1))
        )
    raise ConfigError(f"unknown initial_state kind {kind!r} (nodal or sine)")


def _write_finite_csv(path: Path, traj: Trajectory):
    labels = list(traj.labels)
    header = (
        ["t"]
        + labels
        + [f"{lbl}dot" for lbl in labels]
        + [f"{lbl}ddot" for lbl in labels]
        + ["E", "Qpow", "balance_defect"]
    )
    lines = [",".join(header)]
    for i in range(len(traj.times)):
        row = (
            [traj.times[i]]
            + list(traj.xs[i])
            + list(traj.vs[i])
            + list(traj.accels[i])
            + [traj.energy[i], traj.diss_power[i], traj.balance_defect[i]]
        )
        lines.append(",".join(_fmt(v) for v in row))
    path.write_text("\n".join(lines) + "\n", encoding="utf-8", newline="\n")


def _write_bar_csv(path: Path, traj: c1.BarTrajectory):
    n = traj.us.shape[1]
    header = ["t"] + [f"u_{i}" for i in range(n)] + [f"w_{i}" for i in range(n)]
    lines = [",".join(header)]
    for k in range(len(traj.times)):
        row = [traj.times[k]] + list(traj.us[k]) + list(traj.ws[k])
        lines.append(",".join(_fmt(v) for v in row))
    path.write_text("\n".join(lines) + "\n", encoding="utf-8", newline="\n")


def _write_json(path: Path, obj: dict):
    path.write_text(
        json.dumps(obj, indent=2, sort_keys=True) + "\n", encoding="utf-8", newline="\n"
    )


def _simulate_from_config(cfg_obj: dict, out_dir: Path, stem: str = "trajectory") -> dict:
    """Run the configured simulation, write CSV + diagnostics into
    out_dir, and return the diagnostics record (its "status" field is
    the exit code contribution)."""
    _require_keys(
        cfg_obj, {"system", "parameters", "initial_state", "integrator"}, set(), "config"
    )
    system = cfg_obj["system"]
    params = cfg_obj["parameters"]
    if not isinstance(params, dict):
        raise ConfigError("parameters must be an object")

    if system == "bar":
        bar_cfg = _parse_bar_config(params)
        s0 = _parse_bar_state(cfg_obj["initial_state"], bar_cfg)
        _require_keys(
            cfg_obj["integrator"], {"t_end", "dt"}, {"sample_stride", "cfl_safety"},
            "integrator (bar)",
        )
        integ = cfg_obj["integrator"]
        try:
            traj = c1.integrate_bar(
                s0,
                float(integ["t_end"]),
                bar_cfg,
                dt=float(integ["dt"]),
                sample_stride=int(integ.get("sample_stride", 1)),
                cfl_safety=float(integ.get("cfl_safety", 0.5)),
            )
        except TepdynError as err:
            raise ConfigError(f"bar integration rejected: {err}") from err
        diagnostics = {
            "system": system,
            "parameters": params,
            "truncated": traj.truncated,
            "failure": traj.failure,
            "n_samples": len(traj.times),
            "t_final": float(traj.times[-1]),
            "mass": [float(v) for v in traj.mass],
            "kinetic": [float(v) for v in traj.kinetic],
            "dissipation_power": [float(v) for v in traj.diss_power],
            "mass_exchange_rate": [float(v) for v in traj.exchange_rate],
            "status": EXIT_RUNTIME if traj.truncated else EXIT_OK,
        }
        out_dir.mkdir(parents=True, exist_ok=True)
        _write_bar_csv(out_dir / f"{stem}.csv", traj)
        _write_json(out_dir / f"{stem}_diagnostics.json", diagnostics)
        return diagnostics

    if system not in BUILTIN_SYSTEMS:
        raise ConfigError(
            f"unknown system {system!r}; known: {sorted(BUILTIN_SYSTEMS)} and 'bar'"
        )
    try:
        model = build_system(system, params)
    except TepdynError as err:
        raise ConfigError(f"bad parameters for {system}: {err}") from err
    opts, t_end = _integrator_options(cfg_obj["integrator"])
    try:
        s0 = _parse_state(cfg_obj["initial_state"], model.n)
    except TepdynError as err:
        raise ConfigError(f"bad initial state: {err}") from err

    traj = integrate(model, s0, t_end, opts)
    diagnostics = {
        "system": system,
        "parameters": params,
        "method": opts.method,
        "dt": opts.dt,
        "truncated": traj.truncated,
        "failure": traj.failure,
        "n_samples": len(traj.times),
        "t_final": float(traj.times[-1]),
        "energy_initial": float(traj.energy[0]),
        "energy_final": float(traj.energy[-1]),
        "dissipated_energy": traj.dissipated_energy(),
        "max_balance_defect": float(np.max(np.abs(traj.balance_defect))),
        "status": EXIT_RUNTIME if traj.truncated else EXIT_OK,
    }
    out_dir.mkdir(parents=True, exist_ok=True)
    _write_finite_csv(out_dir / f"{stem}.csv", traj)
    _write_json(out_dir / f"{stem}_diagnostics.json", diagnostics)
    return diagnostics


def cmd_simulate(config_path: str, out: str) -> int:
    try:
        cfg_obj = _load_json(config_path)
        diagnostics = _simulate_from_config(cfg_obj, Path(out))
    except ConfigError as err:
        print(f"config error: {err}", file=sys.stderr)
        return EXIT_CONFIG
    except TepdynError as err:
        # Physics failure before any trajectory existed (e.g. the solve
        # fails at the initial state): record it, still emit diagnostics.
        out_dir = Path(out)
        out_dir.mkdir(parents=True, exist_ok=True)
        _write_json(
            out_dir / "trajectory_diagnostics.json",
            {"status": EXIT_RUNTIME, "failure": f"{type(err).__name__}: {err}"},
        )
        print(f"runtime error: {err}", file=sys.stderr)
        return EXIT_RUNTIME
    if diagnostics["status"] != EXIT_OK:
        print(f"trajectory truncated: {diagnostics['failure']}", file=sys.stderr)
    return diagnostics["status"]


def cmd_verify(suites: Optional[List[str]], report_path: Optional[str]) -> int:
    ids = suites or list(SUITE_IDS)
    unknown = [s for s in ids if s not in SUITE_IDS]
    if unknown:
        print(
            f"unknown suite(s): {', '.join(unknown)}; known: {', '.join(SUITE_IDS)}",
            file=sys.stderr,
        )
        return EXIT_CONFIG
    report = run_suites(ids)
    for suite in report.suites:
        flag = "PASS" if suite.passed else "FAIL"
        print(f"{flag} {suite.suite} ({suite.elapsed_s:.2f}s)")
        for check in suite.checks:
            mark = "ok  " if check.passed else "FAIL"
            print(f"  {mark} {check.name}: {check.measured:.3e} (<= {check.threshold:g})")
    if report_path:
        _write_json(Path(report_path), report.to_dict())
    return EXIT_OK if report.passed else 1


def _grid_points(grid: dict) -> List[dict]:
    if not isinstance(grid, dict):
        raise ConfigError("grid must be an object mapping parameter names to lists")
    if not grid:
        return []
    keys = sorted(grid)
    for k in keys:
        if not isinstance(grid[k], list):
            raise ConfigError(f"grid entry {k!r} must be a list of values")
    return [dict(zip(keys, combo)) for combo in itertools.product(*(grid[k] for k in keys))]


def _thread_cap() -> int:
    raw = os.environ.get("THREADS", "").strip()
    if raw:
        try:
            cap = int(raw)
        except ValueError:
            raise ConfigError(f"THREADS must be an integer, got {raw!r}")
        if cap < 1:
            raise ConfigError("THREADS must be >= 1")
        return cap
    return os.cpu_count() or 1


def cmd_sweep(config_path: str, out: str) -> int:
    try:
        cfg_obj = _load_json(config_path)
        _require_keys(
            cfg_obj,
            {"system", "parameters", "initial_state", "integrator", "grid"},
            set(),
            "sweep config",
        )
        points = _grid_points(cfg_obj["grid"])
        workers = _thread_cap()
    except ConfigError as err:
        print(f"config error: {err}", file=sys.stderr)
        return EXIT_CONFIG

    out_dir = Path(out)
    out_dir.mkdir(parents=True, exist_ok=True)

    def run_point(idx_overrides):
        idx, overrides = idx_overrides
        stem = f"point_{idx:03d}"
        point_cfg = {
            "system": cfg_obj["system"],
            "parameters": {**cfg_obj["parameters"], **overrides},
            "initial_state": cfg_obj["initial_state"],
            "integrator": cfg_obj["integrator"],
        }
        entry = {"index": idx, "overrides": overrides, "stem": stem}
        try:
            diagnostics = _simulate_from_config(point_cfg, out_dir, stem=stem)
            entry["status"] = diagnostics["status"]
            entry["failure"] = diagnostics.get("failure")
        except (ConfigError, TepdynError) as err:
            entry["status"] = EXIT_CONFIG if isinstance(err, ConfigError) else EXIT_RUNTIME
            entry["failure"] = f"{type(err).__name__}: {err}"
        return entry

    if points:
        with ThreadPoolExecutor(max_workers=min(workers, len(points))) as pool:
            entries = list(pool.map(run_point, enumerate(points)))
    else:
        entries = []
    entries.sort(key=lambda e: e["index"])
    _write_json(out_dir / "index.json", {"n_points": len(entries), "points": entries})

    failed = [e for e in entries if e["status"] != EXIT_OK]
    for e in failed:
        print(f"point {e['index']} failed: {e['failure']}", file=sys.stderr)
    return EXIT_OK


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="tepdyn",
        description="Derive and integrate dissipative dynamics from (K, G, Q) potentials.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_sim = sub.add_parser("simulate", help="run one configured simulation")
    p_sim.add_argument("--config", required=True, help="JSON run configuration")
    p_sim.add_argument("--out", required=True, help="output directory")

    p_ver = sub.add_parser("verify", help="run self-verification suites")
    p_ver.add_argument(
        "--suite", action="append", default=None,
        help=f"suite id (repeatable; default all). Known: {', '.join(SUITE_IDS)}",
    )
    p_ver.add_argument("--report", default=None, help="write the JSON report here")

    p_sweep = sub.add_parser("sweep", help="run a parameter grid concurrently")
    p_sweep.add_argument("--config", required=True, help="JSON sweep configuration")
    p_sweep.add_argument("--out", required=True, help="output directory")
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    args = _build_parser().parse_args(argv)
    if args.command == "simulate":
        return cmd_simulate(args.config, args.out)
    if args.command == "verify":
        return cmd_verify(args.suite, args.report)
    return cmd_sweep(args.config, args.out)


if __name__ == "__main__":
    sys.exit(main())
