"""Run configuration: sectioned ``key = value unit`` text with a strict schema.

Every physical value carries a unit in the text and is stored in SI.
Frequencies given in Hz-based units are read as ordinary frequencies and
stored as angular frequencies (rad/s); ``rad/s`` is accepted verbatim.
"""
from __future__ import annotations

import configparser
import hashlib
import math
import re
from dataclasses import dataclass, field, replace

from .constants import EV, K_B, TWO_PI, UM
from .gate import DEFAULT_T_GATE, table_one_channels, with_magnitude
from .lindblad import SolverSettings
from .trap import TrapConfig

__all__ = [
    "ConfigError",
    "RunConfig",
    "COMMANDS",
    "UNITS",
    "CHANNEL_DIMENSION",
    "parse_quantity",
    "format_quantity",
    "parse_config",
    "render_config",
    "config_hash",
]

COMMANDS = ("gate-sim", "sweep", "budget", "trap-calc", "trajectory")


class ConfigError(ValueError):
    """Schema or unit violation in a run configuration."""


UNITS: dict[str, dict[str, float]] = {
    "freq": {"rad/s": 1.0, "Hz": TWO_PI, "kHz": TWO_PI * 1e3, "MHz": TWO_PI * 1e6,
             "GHz": TWO_PI * 1e9},
    "rate": {"1/s": 1.0, "s^-1": 1.0, "quanta/s": 1.0},
    "time": {"s": 1.0, "ms": 1e-3, "us": 1e-6, "ns": 1e-9, "ps": 1e-12},
    "length": {"m": 1.0, "mm": 1e-3, "um": 1e-6, "nm": 1e-9},
    "voltage": {"V": 1.0, "mV": 1e-3},
    "temperature": {"K": 1.0, "mK": 1e-3},
    "energy": {"J": 1.0, "eV": EV, "meV": 1e-3 * EV, "K": K_B},
    "field": {"T": 1.0, "mT": 1e-3},
    "gradient": {"T/m": 1.0, "T/mm": 1e3},
    "cubic": {"T/m^3": 1.0, "T/um^3": 1.0 / UM**3},
    "inv_m2": {"m^-2": 1.0, "um^-2": 1.0 / UM**2},
    "inv_m4": {"m^-4": 1.0, "um^-4": 1.0 / UM**4},
    "inv_m6": {"m^-6": 1.0, "um^-6": 1.0 / UM**6},
    "resistance": {"ohm": 1.0, "kohm": 1e3, "Mohm": 1e6},
    "noise": {"V^2/m^2/Hz": 1.0},
    "angle": {"rad": 1.0, "deg": math.pi / 180.0},
    "dimensionless": {"": 1.0},
}
SI_UNIT = {dim: next(u for u, f in table.items() if f == 1.0) for dim, table in UNITS.items()}

CHANNEL_DIMENSION = {
    "heating": "rate",
    "trap_freq_offset": "freq",
    "motional_dephasing": "freq",
    "gradient_inhomogeneity": "cubic",
    "anharmonicity": "inv_m2",
    "qubit_decoherence": "time",
}

_NUMBER = re.compile(r"^\s*([-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?)\s*(.*?)\s*$")


def parse_quantity(text: str, dimension: str) -> float:
    """``"300 MHz"`` -> SI float for ``dimension``; raises :class:`ConfigError`."""
    m = _NUMBER.match(str(text))
    if not m:
        raise ConfigError(f"cannot read a number from {text!r}")
    value, unit = float(m.group(1)), m.group(2)
    table = UNITS[dimension]
    if unit not in table:
        raise ConfigError(f"unit {unit!r} not valid for a {dimension} quantity "
                          f"(allowed: {', '.join(repr(u) for u in table)})")
    return value * table[unit]


def format_quantity(value: float, dimension: str) -> str:
    unit = SI_UNIT[dimension]
    return f"{value!r} {unit}".rstrip()


# schema: section -> key -> (type, dimension or choices, default)
# types: "q" unit-bearing float, "f" plain float, "i" int, "s" choice string,
# "b" bool, "w" Walsh order list, "p" path string
def _trap_defaults() -> dict:
    t = TrapConfig()
    return {
        "u0": ("q", "voltage", t.u0), "omega_ac": ("q", "freq", t.omega_ac),
        "omega_t": ("q", "freq", t.omega_t), "omega_a": ("q", "freq", t.omega_a),
        "q_param": ("q", "dimensionless", t.q_param),
        "d_eff_y": ("q", "length", t.d_eff_y), "d_eff_z": ("q", "length", t.d_eff_z),
        "c2": ("q", "inv_m2", t.c2 / UM**2), "c4": ("q", "inv_m4", t.c4 / UM**4),
        "c6": ("q", "inv_m6", t.c6 / UM**6), "b0": ("q", "field", t.b0),
        "b1": ("q", "gradient", t.b1), "b3": ("q", "cubic", t.b3),
        "t_tank": ("q", "temperature", t.t_tank),
    }


SCHEMA: dict[str, dict[str, tuple]] = {
    "run": {"command": ("s", COMMANDS, None), "seed": ("i", None, 0)},
    "trap": _trap_defaults(),
    "schedule": {"walsh": ("w", None, None), "t_gate": ("q", "time", DEFAULT_T_GATE),
                 "nbar0": ("q", "dimensionless", None)},
    "channels": {k: ("q", d, None) for k, d in CHANNEL_DIMENSION.items()},
    "sweep": {"channel": ("s", tuple(CHANNEL_DIMENSION), "trap_freq_offset"),
              "start": ("c", None, None), "stop": ("c", None, None),
              "points": ("i", None, 10), "spacing": ("s", ("log", "linear"), "log")},
    "solver": {"method": ("s", ("rk4", "rk45"), "rk4"), "steps_per_period": ("i", None, 1200),
               "rtol": ("f", None, 1e-10), "atol": ("f", None, 1e-12),
               "trace_tol": ("f", None, 1e-8), "fock_cutoff": ("i", None, None),
               "check_truncation": ("b", None, False)},
    "trajectory": {"energy_min": ("q", "energy", 0.0), "energy_max": ("q", "energy", 500 * K_B),
                   "energy_points": ("i", None, 21), "phi_points": ("i", None, 16),
                   "horizon": ("q", "time", 10e-6), "loss_radius": ("q", "length", None),
                   "release_angle": ("q", "angle", math.pi / 4),
                   "points_per_cycle": ("i", None, 64)},
    "trap_calc": {"impedance_y": ("q", "resistance", 80e3),
                  "impedance_z": ("q", "resistance", 500e3),
                  "amplitude": ("q", "length", 1.3e-6),
                  "noise_density": ("q", "noise", 1e-12),
                  "ndot_ref": ("q", "rate", 100.0), "omega_ref": ("q", "freq", TWO_PI * 1e6),
                  "gamma": ("f", None, 1.3), "readout_time": ("q", "time", 10e-6)},
    "output": {"path": ("p", None, None), "format": ("s", ("csv", "json"), "csv")},
}


@dataclass
class RunConfig:
    """Validated configuration; every section is a dict of SI values."""

    command: str
    seed: int = 0
    trap: dict = field(default_factory=dict)
    schedule: dict = field(default_factory=dict)
    channels: dict = field(default_factory=dict)
    sweep: dict = field(default_factory=dict)
    solver: dict = field(default_factory=dict)
    trajectory: dict = field(default_factory=dict)
    trap_calc: dict = field(default_factory=dict)
    output: dict = field(default_factory=dict)

    def trap_config(self) -> TrapConfig:
        t = dict(self.trap)
        t["c2"] *= UM**2
        t["c4"] *= UM**4
        t["c6"] *= UM**6
        return TrapConfig(**t)

    def solver_settings(self) -> SolverSettings:
        s = self.solver
        return SolverSettings(method=s["method"], rtol=s["rtol"], atol=s["atol"],
                              steps_per_period=s["steps_per_period"], trace_tol=s["trace_tol"])

    def walsh_orders(self) -> tuple[int, ...]:
        w = self.schedule.get("walsh")
        if w is not None:
            return tuple(w)
        return (0, 1, 3) if self.command == "sweep" else (3,)

    def nbar0(self) -> float:
        nb = self.schedule.get("nbar0")
        return self.trap_config().nbar_axial if nb is None else nb

    def error_channels(self, fill_defaults: bool = False) -> list:
        """Configured channels in reference column order.

        With ``fill_defaults`` unset channels take their reference magnitudes
        (used by ``budget``); otherwise only configured channels are returned.
        """
        out = []
        for ch in table_one_channels(self.trap_config()):
            value = self.channels.get(ch.kind)
            if value is not None:
                out.append(with_magnitude(ch, value))
            elif fill_defaults:
                out.append(ch)
        return out

    def sweep_magnitudes(self) -> list[float]:
        sw = self.sweep
        kind = sw["channel"]
        ref = next(c for c in table_one_channels(self.trap_config()) if c.kind == kind).magnitude
        start = ref / 3.0 if sw["start"] is None else sw["start"]
        stop = ref * 3.0 if sw["stop"] is None else sw["stop"]
        n = sw["points"]
        if n == 1:
            return [start]
        if sw["spacing"] == "log":
            if start <= 0 or stop <= 0:
                raise ConfigError("log spacing needs positive start and stop")
            r = (stop / start) ** (1.0 / (n - 1))
            return [start * r**k for k in range(n)]
        return [start + (stop - start) * k / (n - 1) for k in range(n)]


def _line_of(text: str, section: str, key: str | None = None) -> int | None:
    current = None
    for i, line in enumerate(text.splitlines(), 1):
        s = line.strip()
        if s.startswith("[") and s.endswith("]"):
            current = s[1:-1].strip()
            if key is None and current == section:
                return i
        elif key is not None and current == section and "=" in s:
            if s.split("=", 1)[0].strip() == key:
                return i
    return None


def _where(text, section, key=None) -> str:
    line = _line_of(text, section, key)
    loc = f"[{section}]" + (f" {key}" if key else "")
    return f"line {line}: {loc}" if line else loc


def _convert(kind, spec, raw: str, sweep_dim: str | None):
    raw = raw.strip()
    if kind == "q":
        return parse_quantity(raw, spec)
    if kind == "c":
        return parse_quantity(raw, sweep_dim)
    if kind == "f":
        return float(raw)
    if kind == "i":
        if not re.fullmatch(r"[-+]?\d+", raw):
            raise ConfigError(f"expected an integer, got {raw!r}")
        return int(raw)
    if kind == "s":
        if raw not in spec:
            raise ConfigError(f"{raw!r} not one of {', '.join(spec)}")
        return raw
    if kind == "b":
        low = raw.lower()
        if low not in ("true", "false"):
            raise ConfigError(f"expected true or false, got {raw!r}")
        return low == "true"
    if kind == "w":
        orders = tuple(int(x) for x in re.split(r"[,\s]+", raw) if x)
        if not orders or any(o not in (0, 1, 3) for o in orders):
            raise ConfigError(f"Walsh orders must be drawn from 0, 1, 3; got {raw!r}")
        return orders
    if kind == "p":
        return raw
    raise AssertionError(kind)


def _validate(cfg: RunConfig) -> None:
    for kind, value in cfg.channels.items():
        if value is not None and value < 0:
            raise ConfigError(f"[channels] {kind} must be non-negative")
    if cfg.channels.get("qubit_decoherence") == 0:
        raise ConfigError("[channels] qubit_decoherence must be positive")
    if cfg.sweep["points"] < 1:
        raise ConfigError("[sweep] points must be >= 1")
    if cfg.solver["steps_per_period"] < 1:
        raise ConfigError("[solver] steps_per_period must be >= 1")
    fc = cfg.solver["fock_cutoff"]
    if fc is not None and fc < 2:
        raise ConfigError("[solver] fock_cutoff must be >= 2")
    tr = cfg.trajectory
    if tr["energy_points"] < 1 or tr["phi_points"] < 1:
        raise ConfigError("[trajectory] grids must be non-empty")
    if tr["energy_min"] < 0 or tr["energy_max"] < tr["energy_min"]:
        raise ConfigError("[trajectory] need 0 <= energy_min <= energy_max")
    if cfg.schedule["t_gate"] <= 0:
        raise ConfigError("[schedule] t_gate must be positive")
    try:
        cfg.trap_config()
    except ValueError as exc:
        raise ConfigError(f"[trap] {exc}") from None


def parse_config(text: str, command: str | None = None) -> RunConfig:
    """Parse and validate configuration text; omitted fields take prototype defaults.

    ``command`` supplies the subcommand when the text has no ``[run] command``;
    if both are present they must agree.
    """
    parser = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"),
                                       default_section="__none__")
    parser.optionxform = str
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"malformed config: {exc}") from None
    for section in parser.sections():
        if section not in SCHEMA:
            raise ConfigError(f"{_where(text, section)}: unknown section")
        for key in parser[section]:
            if key not in SCHEMA[section]:
                raise ConfigError(f"{_where(text, section, key)}: unknown key")

    sweep_channel = parser.get("sweep", "channel", fallback=SCHEMA["sweep"]["channel"][2]).strip()
    sweep_dim = CHANNEL_DIMENSION.get(sweep_channel)
    values: dict[str, dict] = {}
    for section, keys in SCHEMA.items():
        values[section] = {}
        for key, (kind, spec, default) in keys.items():
            if parser.has_option(section, key):
                try:
                    values[section][key] = _convert(kind, spec, parser.get(section, key), sweep_dim)
                except (ConfigError, ValueError) as exc:
                    raise ConfigError(f"{_where(text, section, key)}: {exc}") from None
            else:
                values[section][key] = default

    run = values.pop("run")
    cmd = run["command"]
    if command is not None:
        if command not in COMMANDS:
            raise ConfigError(f"unknown command {command!r}")
        if cmd is not None and cmd != command:
            raise ConfigError(f"config is for {cmd!r} but {command!r} was requested")
        cmd = command
    if cmd is None:
        raise ConfigError("no command given ([run] command or subcommand)")
    cfg = RunConfig(command=cmd, seed=run["seed"], **values)
    _validate(cfg)
    return cfg


def render_config(cfg: RunConfig) -> str:
    """Canonical text form; ``parse_config(render_config(c)) == c``."""
    lines = ["[run]", f"command = {cfg.command}", f"seed = {cfg.seed}"]
    sweep_dim = CHANNEL_DIMENSION[cfg.sweep["channel"]]
    for section, keys in SCHEMA.items():
        if section == "run":
            continue
        body = []
        data = getattr(cfg, section)
        for key, (kind, spec, _) in keys.items():
            value = data.get(key)
            if value is None:
                continue
            if kind == "q":
                text = format_quantity(value, spec)
            elif kind == "c":
                text = format_quantity(value, sweep_dim)
            elif kind == "f":
                text = repr(float(value))
            elif kind == "b":
                text = "true" if value else "false"
            elif kind == "w":
                text = ", ".join(str(o) for o in value)
            else:
                text = str(value)
            body.append(f"{key} = {text}")
        if body:
            lines += ["", f"[{section}]"] + body
    return "\n".join(lines) + "\n"


def config_hash(cfg: RunConfig) -> str:
    """SHA-256 of the canonical rendering (platform independent).

    The ``[output]`` section is left out: where results are written does not
    change what was computed.
    """
    physics = replace(cfg, output={k: None for k in cfg.output})
    return hashlib.sha256(render_config(physics).encode("utf-8")).hexdigest()
