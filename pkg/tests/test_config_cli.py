import csv
import io
import json
import math

import pytest
from hypothesis import given, settings, strategies as st

from trapped_electrons import cli
from trapped_electrons import config as cf
from trapped_electrons import gate
from trapped_electrons.constants import GHZ, K_B, MHZ, UM

GATE_INI = """\
[schedule]
nbar0 = 0
walsh = 0
[solver]
fock_cutoff = 20
[channels]
heating = 140 quanta/s
"""

TRAJ_INI = """\
[trajectory]
energy_min = 0 K
energy_max = 300 K
energy_points = 4
phi_points = 4
horizon = 0.2 us
"""


def run_cli(tmp_path, command, text, *extra, name="out.csv"):
    ini = tmp_path / "run.ini"
    ini.write_text(text)
    out = tmp_path / name
    code = cli.main([command, "--config", str(ini), "--out", str(out), *extra])
    return code, out


class TestQuantities:
    @pytest.mark.parametrize("text,dim,value", [
        ("300 MHz", "freq", 300 * MHZ), ("2 us", "time", 2e-6), ("140 quanta/s", "rate", 140.0),
        ("1.5e-7 T/um^3", "cubic", 1.5e-7 / UM**3), ("250 K", "energy", 250 * K_B),
        ("0.53", "dimensionless", 0.53), ("-2e-9 um^-6", "inv_m6", -2e-9 / UM**6),
    ])
    def test_parse(self, text, dim, value):
        assert cf.parse_quantity(text, dim) == pytest.approx(value, rel=1e-15)

    @pytest.mark.parametrize("text,dim", [("300 MHz", "time"), ("fast", "time"), ("3 furlongs", "length")])
    def test_reject(self, text, dim):
        with pytest.raises(cf.ConfigError):
            cf.parse_quantity(text, dim)

    @given(st.floats(-1e12, 1e12, allow_nan=False), st.sampled_from(sorted(cf.UNITS)))
    def test_format_round_trip(self, value, dim):
        assert cf.parse_quantity(cf.format_quantity(value, dim), dim) == value


class TestParse:
    def test_empty_gate_config_is_prototype(self):
        cfg = cf.parse_config("", "gate-sim")
        trap = cfg.trap_config()
        assert trap.omega_a == pytest.approx(300 * MHZ)
        assert trap.omega_ac == pytest.approx(10.6 * GHZ)
        assert cfg.schedule["t_gate"] == 2e-6
        assert cfg.walsh_orders() == (3,)
        assert cfg.nbar0() == pytest.approx(3.667, abs=1e-3)

    def test_heating_in_quanta(self):
        cfg = cf.parse_config("[channels]\nheating = 140 quanta/s\n", "gate-sim")
        assert cfg.channels["heating"] == 140.0
        (ch,) = cfg.error_channels()
        assert isinstance(ch, gate.Heating) and ch.rate == 140.0

    def test_default_channels_match_table(self):
        cfg = cf.parse_config("", "budget")
        got = [(c.kind, c.magnitude) for c in cfg.error_channels(fill_defaults=True)]
        want = [(c.kind, c.magnitude) for c in gate.table_one_channels(cfg.trap_config())]
        assert got == want

    def test_negative_tau_rejected(self):
        with pytest.raises(cf.ConfigError, match="qubit_decoherence"):
            cf.parse_config("[channels]\nqubit_decoherence = -1 s\n", "gate-sim")

    def test_unknown_key_has_line(self):
        with pytest.raises(cf.ConfigError, match="line 3"):
            cf.parse_config("[trap]\nu0 = 14 V\nbogus = 1\n", "gate-sim")

    def test_unknown_section(self):
        with pytest.raises(cf.ConfigError, match="unknown section"):
            cf.parse_config("[nope]\n", "gate-sim")

    def test_unit_mismatch(self):
        with pytest.raises(cf.ConfigError, match="omega_a"):
            cf.parse_config("[trap]\nomega_a = 300 K\n", "gate-sim")

    def test_command_conflict(self):
        with pytest.raises(cf.ConfigError):
            cf.parse_config("[run]\ncommand = sweep\n", "budget")
        with pytest.raises(cf.ConfigError):
            cf.parse_config("")

    def test_sweep_bounds_use_channel_dimension(self):
        cfg = cf.parse_config("[sweep]\nchannel = heating\nstart = 14 quanta/s\n"
                              "stop = 1400 quanta/s\npoints = 3\n", "sweep")
        assert cfg.sweep_magnitudes() == pytest.approx([14.0, 140.0, 1400.0])
        assert cfg.walsh_orders() == (0, 1, 3)


@st.composite
def configs(draw):
    lines = [f"[run]\ncommand = {draw(st.sampled_from(cf.COMMANDS))}",
             f"seed = {draw(st.integers(0, 2**31))}"]
    lines.append("[trap]")
    lines.append(f"omega_a = {draw(st.floats(10, 1000))} MHz")
    lines.append(f"q_param = {draw(st.floats(0.01, 0.9))}")
    lines.append(f"c4 = {draw(st.floats(-1e-6, 1e-6))} um^-4")
    lines.append("[schedule]")
    lines.append(f"walsh = {', '.join(map(str, draw(st.lists(st.sampled_from([0, 1, 3]), min_size=1, max_size=3, unique=True))))}")
    lines.append(f"nbar0 = {draw(st.floats(0, 5))}")
    lines.append("[channels]")
    lines.append(f"heating = {draw(st.floats(0, 1e4))} quanta/s")
    lines.append(f"qubit_decoherence = {draw(st.floats(1e-6, 10))} ms")
    lines.append("[solver]")
    lines.append(f"method = {draw(st.sampled_from(['rk4', 'rk45']))}")
    lines.append(f"check_truncation = {draw(st.sampled_from(['true', 'false']))}")
    return "\n".join(lines) + "\n"


@given(configs())
@settings(max_examples=60, deadline=None)
def test_render_parse_round_trip(text):
    cfg = cf.parse_config(text)
    canon = cf.render_config(cfg)
    again = cf.parse_config(canon)
    assert again == cfg
    assert cf.render_config(again) == canon
    assert cf.config_hash(again) == cf.config_hash(cfg)


class TestCli:
    def test_trap_calc(self, tmp_path):
        code, out = run_cli(tmp_path, "trap-calc", "", "--omega-t", "2 GHz")
        assert code == 0
        rows = {r["quantity"]: r for r in csv.DictReader(io.StringIO(out.read_text()))}
        assert float(rows["cooling_time_y"]["value [see unit]"]) == pytest.approx(8.45e-6, rel=1e-3)
        assert rows["cooling_time_y"]["unit"] == "s"
        assert float(rows["heating_rate_electron"]["value [see unit]"]) == pytest.approx(14.62, rel=1e-3)

    def test_trap_calc_override_changes_value(self, tmp_path):
        code, out = run_cli(tmp_path, "trap-calc", "", "--impedance-y", "160 kohm")
        assert code == 0
        rows = {r["quantity"]: r for r in csv.DictReader(io.StringIO(out.read_text()))}
        assert float(rows["cooling_time_y"]["value [see unit]"]) == pytest.approx(4.22e-6, rel=1e-3)

    def test_gate_sim_csv_units(self, tmp_path):
        code, out = run_cli(tmp_path, "gate-sim", GATE_INI)
        assert code == 0
        header, row = out.read_text().splitlines()[:2]
        assert "duration [s]" in header and "rabi [rad/s]" in header
        rec = dict(zip(header.split(","), row.split(",")))
        assert float(rec["infidelity [1]"]) == pytest.approx(1.40e-4, rel=0.05)
        meta = json.loads((tmp_path / "out.csv.meta.json").read_text())
        assert meta["gate_failures"] == [] and len(meta["config_hash"]) == 64

    def test_deterministic_rerun(self, tmp_path):
        a = run_cli(tmp_path, "gate-sim", GATE_INI, "--format", "json", name="a.json")
        b = run_cli(tmp_path, "gate-sim", GATE_INI, "--format", "json", name="b.json")
        assert a[0] == b[0] == 0
        assert a[1].read_bytes() == b[1].read_bytes()

    def test_trajectory_json(self, tmp_path):
        code, out = run_cli(tmp_path, "trajectory", TRAJ_INI, "--format", "json", name="t.json")
        assert code == 0
        recs = json.loads(out.read_text())
        assert len(recs) == 16
        assert [r["phi"] for r in recs[:4]] == pytest.approx([0, math.pi / 2, math.pi, 1.5 * math.pi])
        assert {"energy", "phi", "storage_time", "lost", "run_id"} <= set(recs[0])
        meta = json.loads((tmp_path / "t.json.meta.json").read_text())
        assert meta["diagnostics"]["static_energy_drift"] < 1e-6

    def test_config_error_exit_code(self, tmp_path, capsys):
        code, out = run_cli(tmp_path, "gate-sim", "[channels]\nqubit_decoherence = -1 s\n")
        assert code == 2 and not out.exists()
        assert "qubit_decoherence" in capsys.readouterr().err

    def test_simulation_error_exit_code(self, tmp_path):
        # nbar0 = 4 does not fit in 20 Fock levels
        code, out = run_cli(tmp_path, "gate-sim", GATE_INI.replace("nbar0 = 0", "nbar0 = 4"))
        assert code == 1 and not out.exists()

    def test_bad_threads(self, tmp_path):
        code, _ = run_cli(tmp_path, "trap-calc", "", "--threads", "0")
        assert code == 2
