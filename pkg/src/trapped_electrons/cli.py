"""Command-line front end: ``trapped-electrons <command> [--config FILE] ...``.

Results go to ``--out`` (CSV with unit-annotated headers, or a JSON array
of records) via a temporary file and an atomic rename. A sidecar
``<out>.meta.json`` holds the run id, config hash, tool version, timestamp
and diagnostics. The exit status is 0 only when every diagnostic gate
passes, 1 when one fails and 2 for configuration errors.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
import tempfile
import time
from dataclasses import dataclass, field
from importlib import metadata
from pathlib import Path

from . import gate, trajectory, trap
from .config import (COMMANDS, CHANNEL_DIMENSION, SI_UNIT, ConfigError, RunConfig, config_hash,
                     parse_config)
from .constants import EV, K_B, M_CA40, M_E
from .lindblad import SolverError
from .operators import TruncationError

__all__ = ["main", "run", "RunResult", "write_results"]

TRACE_GATE = 1e-8
POSITIVITY_GATE = -1e-7
TRUNCATION_GATE = 1e-7
ENERGY_DRIFT_GATE = 1e-6


def tool_version() -> str:
    try:
        return metadata.version("trapped-electrons")
    except metadata.PackageNotFoundError:
        return "0+unknown"


@dataclass
class RunResult:
    columns: list[tuple[str, str]]  # (name, unit)
    rows: list[dict]
    diagnostics: dict = field(default_factory=dict)
    failures: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.failures


def _quantum_gates(result: RunResult, rows: list[dict], trace_tol: float) -> None:
    drift = max((r["trace_drift"] for r in rows), default=0.0)
    lam = min((r["min_eigenvalue"] for r in rows), default=0.0)
    trunc = [r["truncation_delta"] for r in rows if r.get("truncation_delta") is not None]
    result.diagnostics.update(max_trace_drift=drift, min_eigenvalue=lam)
    if drift > min(trace_tol, TRACE_GATE):
        result.failures.append(f"trace drift {drift:.2e} exceeds {TRACE_GATE:.0e}")
    if lam < POSITIVITY_GATE:
        result.failures.append(f"spin state eigenvalue {lam:.2e} below {POSITIVITY_GATE:.0e}")
    if trunc:
        result.diagnostics["max_truncation_delta"] = max(trunc)
        if max(trunc) > TRUNCATION_GATE:
            result.failures.append(f"truncation shift {max(trunc):.2e} exceeds {TRUNCATION_GATE:.0e}")


def _spec(cfg: RunConfig):
    from .operators import HilbertSpec

    n = cfg.solver["fock_cutoff"]
    return HilbertSpec(n) if n else None


def _run_gate_sim(cfg: RunConfig, threads: int) -> RunResult:
    settings = cfg.solver_settings()
    channels = cfg.error_channels()
    rows = []
    for w in cfg.walsh_orders():
        schedule = gate.calibrated_schedule(w, cfg.schedule["t_gate"], settings)
        res = gate.run_gate(schedule, channels, cfg.nbar0(), settings, _spec(cfg),
                            check_truncation=cfg.solver["check_truncation"])
        rows.append({"walsh": w, "channels": "+".join(c.kind for c in channels) or "none",
                     "duration": schedule.duration, "rabi": schedule.rabi,
                     "infidelity": res.infidelity, "bell_fidelity": res.bell_fidelity,
                     "fock_cutoff": res.fock_cutoff, "trace_drift": res.trace_drift,
                     "truncation_delta": res.truncation_delta,
                     "min_eigenvalue": res.min_eigenvalue})
    cols = [("walsh", ""), ("channels", ""), ("duration", "s"), ("rabi", "rad/s"),
            ("infidelity", "1"), ("bell_fidelity", "1"), ("fock_cutoff", ""),
            ("trace_drift", "1"), ("truncation_delta", "1"), ("min_eigenvalue", "1")]
    result = RunResult(cols, rows)
    _quantum_gates(result, rows, settings.trace_tol)
    return result


def _run_sweep(cfg: RunConfig, threads: int) -> RunResult:
    settings = cfg.solver_settings()
    kind = cfg.sweep["channel"]
    base = next(c for c in gate.table_one_channels(cfg.trap_config()) if c.kind == kind)
    rows = gate.sweep(base, cfg.sweep_magnitudes(), cfg.walsh_orders(), settings, cfg.nbar0(),
                      cfg.schedule["t_gate"], cfg.solver["fock_cutoff"], threads)
    unit = SI_UNIT[CHANNEL_DIMENSION[kind]]
    cols = [("channel", ""), ("magnitude", unit), ("walsh", ""), ("infidelity", "1"),
            ("trace_drift", "1"), ("min_eigenvalue", "1")]
    result = RunResult(cols, rows)
    _quantum_gates(result, rows, settings.trace_tol)
    return result


def _run_budget(cfg: RunConfig, threads: int) -> RunResult:
    settings = cfg.solver_settings()
    walsh = cfg.walsh_orders()
    if len(walsh) != 1:
        raise ConfigError("budget takes a single Walsh order")
    rows = gate.error_budget(cfg.error_channels(fill_defaults=True), walsh[0], cfg.nbar0(),
                             settings, cfg.schedule["t_gate"],
                             check_truncation=cfg.solver["check_truncation"],
                             fock_cutoff=cfg.solver["fock_cutoff"])
    for r in rows:
        dim = CHANNEL_DIMENSION.get(r["channel"])
        r["unit"] = SI_UNIT[dim] if dim else ""
    cols = [("channel", ""), ("magnitude", "see unit"), ("unit", ""), ("infidelity", "1"),
            ("trace_drift", "1"), ("truncation_delta", "1"), ("min_eigenvalue", "1")]
    result = RunResult(cols, rows)
    _quantum_gates(result, rows, settings.trace_tol)
    return result


def _run_trap_calc(cfg: RunConfig, threads: int) -> RunResult:
    t = cfg.trap_config()
    tc = cfg.trap_calc
    x_t, x_mm = trap.micromotion_amplitude(t.q_param, t.omega_t, t.t_tank)
    alpha, f_d = trap.readout_displacement(t.b1, tc["readout_time"], t.omega_a, nbar0=t.nbar_axial)
    rows = [
        ("secular_frequency", trap.secular_frequency(t.q_param, t.omega_ac), "rad/s"),
        ("mathieu_q", t.q_param, "1"),
        ("cooling_time_y", trap.cooling_time_constant(t.d_eff_y, tc["impedance_y"]), "s"),
        ("cooling_time_z", trap.cooling_time_constant(t.d_eff_z, tc["impedance_z"]), "s"),
        ("nbar_transverse", trap.equilibrium_nbar(t.omega_t, t.t_tank), "1"),
        ("t_axial", t.t_axial, "K"),
        ("nbar_axial", t.nbar_axial, "1"),
        ("thermal_amplitude", x_t, "m"),
        ("micromotion_amplitude", x_mm, "m"),
        ("heating_rate_reference", trap.heating_rate_from_noise(tc["noise_density"],
                                                                tc["omega_ref"], M_CA40),
         "1/s"),
        ("heating_rate_electron", trap.extrapolate_heating(tc["ndot_ref"], tc["omega_ref"],
                                                           t.omega_a, gamma=tc["gamma"]), "1/s"),
        ("anharmonic_shift", trap.anharmonic_frequency_shift(tc["amplitude"] * 1e6, t.c2, t.c4,
                                                             t.c6), "1"),
        ("qubit_frequency", trap.qubit_frequency(t.b0), "rad/s"),
        ("ground_state_extent", trap.ground_state_extent(t.omega_a, M_E), "m"),
        ("readout_alpha", abs(alpha), "1"),
        ("readout_fidelity", f_d, "1"),
    ]
    out = [{"quantity": q, "value": v, "unit": u} for q, v, u in rows]
    result = RunResult([("quantity", ""), ("value", "see unit"), ("unit", "")], out)
    bad = [r["quantity"] for r in out if not math.isfinite(r["value"])]
    if bad:
        result.failures.append(f"non-finite values: {', '.join(bad)}")
    return result


def _run_trajectory(cfg: RunConfig, threads: int) -> RunResult:
    tr = cfg.trajectory
    drive = trajectory.DriveField.from_trap(cfg.trap_config())
    dt = trajectory.default_dt(drive, tr["points_per_cycle"])
    n_e, n_p = tr["energy_points"], tr["phi_points"]
    e0, e1 = tr["energy_min"] / EV, tr["energy_max"] / EV
    energies = [e0 + (e1 - e0) * k / (n_e - 1) for k in range(n_e)] if n_e > 1 else [e0]
    phis = [2.0 * math.pi * k / n_p for k in range(n_p)]
    smap = trajectory.stability_map(energies, phis, drive, tr["horizon"], dt, tr["loss_radius"],
                                    tr["release_angle"], threads)
    rows = [{"energy": o.initial_energy, "phi": o.phi, "storage_time": o.storage_time,
             "lost": o.lost} for o in smap.outcomes()]
    result = RunResult([("energy", "eV"), ("phi", "rad"), ("storage_time", "s"), ("lost", "")],
                       rows)
    threshold = smap.stable_threshold()
    drift = trajectory.static_energy_drift(drive, tr["horizon"], dt)
    result.diagnostics.update(stable_threshold_ev=threshold,
                              stable_threshold_kelvin=threshold * EV / K_B,
                              static_energy_drift=drift)
    if drift > ENERGY_DRIFT_GATE:
        result.failures.append(f"static-field energy drift {drift:.2e} exceeds "
                               f"{ENERGY_DRIFT_GATE:.0e}; reduce dt")
    return result


_RUNNERS = {"gate-sim": _run_gate_sim, "sweep": _run_sweep, "budget": _run_budget,
            "trap-calc": _run_trap_calc, "trajectory": _run_trajectory}


def run(cfg: RunConfig, threads: int = 1) -> RunResult:
    return _RUNNERS[cfg.command](cfg, threads)


def _cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _header(name: str, unit: str) -> str:
    return f"{name} [{unit}]" if unit else name


def render_csv(result: RunResult) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow([_header(n, u) for n, u in result.columns])
    for row in result.rows:
        writer.writerow([_cell(row.get(n)) for n, _ in result.columns])
    return buf.getvalue()


def render_json(result: RunResult, cfg: RunConfig) -> str:
    h = config_hash(cfg)
    records = []
    for row in result.rows:
        rec = {"run_id": h[:16], "config_hash": h, "tool_version": tool_version()}
        rec.update({n: row.get(n) for n, _ in result.columns})
        records.append(rec)
    return json.dumps(records, indent=1, allow_nan=False) + "\n"


def _atomic_write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_results(result: RunResult, cfg: RunConfig, path: Path, fmt: str) -> None:
    body = render_csv(result) if fmt == "csv" else render_json(result, cfg)
    _atomic_write(path, body)
    h = config_hash(cfg)
    meta = {"run_id": h[:16], "config_hash": h, "tool_version": tool_version(),
            "command": cfg.command, "timestamp": time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime()),
            "diagnostics": result.diagnostics, "gate_failures": result.failures,
            "columns": [{"name": n, "unit": u} for n, u in result.columns]}
    _atomic_write(path.with_name(path.name + ".meta.json"), json.dumps(meta, indent=1) + "\n")


def _summary(result: RunResult, stream) -> None:
    names = [n for n, _ in result.columns]
    table = [[_short(row.get(n)) for n in names] for row in result.rows]
    widths = [max(len(n), *(len(r[i]) for r in table)) if table else len(n)
              for i, n in enumerate(names)]
    print("  ".join(n.ljust(w) for n, w in zip(names, widths)), file=stream)
    for r in table:
        print("  ".join(c.ljust(w) for c, w in zip(r, widths)), file=stream)
    for k, v in result.diagnostics.items():
        print(f"# {k} = {_short(v)}", file=stream)
    for f in result.failures:
        print(f"# GATE FAILED: {f}", file=stream)


def _short(v) -> str:
    if isinstance(v, float):
        return f"{v:.4g}"
    return "" if v is None else str(v)


_VALUE_FLAGS = {
    # flag -> (section, key)
    "q_param": ("trap", "q_param"), "omega_ac": ("trap", "omega_ac"),
    "omega_t": ("trap", "omega_t"), "omega_a": ("trap", "omega_a"),
    "t_tank": ("trap", "t_tank"), "d_eff_y": ("trap", "d_eff_y"), "d_eff_z": ("trap", "d_eff_z"),
    "impedance_y": ("trap_calc", "impedance_y"), "impedance_z": ("trap_calc", "impedance_z"),
    "amplitude": ("trap_calc", "amplitude"), "noise_density": ("trap_calc", "noise_density"),
    "gamma": ("trap_calc", "gamma"),
}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="trapped-electrons",
                                description="Two-electron gate simulation and trap calculators.")
    sub = p.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sp = sub.add_parser(name)
        sp.add_argument("--config", type=Path, help="sectioned key = value config file")
        sp.add_argument("--out", type=Path, help="result file (default: none, summary only)")
        sp.add_argument("--format", choices=("csv", "json"), help="result format")
        sp.add_argument("--threads", type=int, default=1, help="worker processes")
        if name in ("gate-sim", "sweep", "budget"):
            sp.add_argument("--walsh", type=int, choices=(0, 1, 3), action="append",
                            help="Walsh order (repeatable)")
        if name == "trap-calc":
            for flag in _VALUE_FLAGS:
                sp.add_argument("--" + flag.replace("_", "-"), dest=flag, metavar="VALUE",
                                help="value with unit, e.g. '10.6 GHz'")
    return p


def _apply_overrides(cfg: RunConfig, args) -> None:
    from .config import SCHEMA, _convert

    if getattr(args, "walsh", None):
        cfg.schedule["walsh"] = tuple(args.walsh)
    if args.format:
        cfg.output["format"] = args.format
    if args.out:
        cfg.output["path"] = str(args.out)
    for flag, (section, key) in _VALUE_FLAGS.items():
        raw = getattr(args, flag, None)
        if raw is None:
            continue
        kind, spec, _ = SCHEMA[section][key]
        try:
            getattr(cfg, section)[key] = _convert(kind, spec, raw, None)
        except (ConfigError, ValueError) as exc:
            raise ConfigError(f"--{flag.replace('_', '-')}: {exc}") from None


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        text = args.config.read_text() if args.config else ""
        cfg = parse_config(text, args.command)
        _apply_overrides(cfg, args)
        try:
            cfg.trap_config()
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
        if args.threads < 1:
            raise ConfigError("--threads must be >= 1")
    except (ConfigError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    try:
        result = run(cfg, args.threads)
    except (SolverError, TruncationError, ValueError) as exc:
        print(f"error: {cfg.command} failed: {exc}", file=sys.stderr)
        return 1
    _summary(result, sys.stdout)
    path = cfg.output.get("path")
    if path:
        write_results(result, cfg, Path(path), cfg.output["format"])
    return 0 if result.ok else 1


if __name__ == "__main__":
    sys.exit(main())
