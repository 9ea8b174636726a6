import math
import warnings

import pytest
from hypothesis import given, settings, strategies as st

from trapped_electrons import trap
from trapped_electrons.constants import GHZ, MHZ, UM

# CODATA 2018 values, hard-coded for an independent unit audit; the package uses
# scipy.constants (a later CODATA release), so audits compare at 1e-7 relative
E = 1.602176634e-19
ME = 9.1093837015e-31
HBAR = 1.054571817e-34
KB = 1.380649e-23
MUB = 9.2740100783e-24
AMU = 1.66053906660e-27
PI2 = 2 * math.pi


class TestCooling:
    def test_transverse_y(self):
        tau = trap.cooling_time_constant(138 * UM, 80e3)
        assert tau == pytest.approx(ME / E**2 * (138e-6) ** 2 / 80e3, rel=1e-7)
        assert tau == pytest.approx(8e-6, rel=0.10)

    def test_transverse_z_formula(self):
        # the anchor comparison against the rounded 4 us lives in the acceptance suite
        tau = trap.cooling_time_constant(254 * UM, 500e3)
        assert tau == pytest.approx(ME / E**2 * (254e-6) ** 2 / 500e3, rel=1e-7)

    def test_quadratic_in_distance(self):
        assert trap.cooling_time_constant(2e-4, 1e5) == \
            pytest.approx(4 * trap.cooling_time_constant(1e-4, 1e5))

    def test_tank_circuit(self):
        tank = trap.TankCircuit(q_factor=1000, capacitance=1e-12, inductance=6.4e-9)
        assert tank.impedance == pytest.approx(80e3)
        assert trap.cooling_time_constant(138 * UM, tank) == \
            pytest.approx(trap.cooling_time_constant(138 * UM, 80e3))
        with pytest.raises(ValueError):
            trap.TankCircuit(1000, 1e-12, 6.4e-9, impedance=81e3)

    def test_rejects_non_positive_impedance(self):
        with pytest.raises(ValueError):
            trap.cooling_time_constant(1e-4, 0.0)


class TestOccupation:
    def test_transverse(self):
        n = trap.equilibrium_nbar(2 * GHZ, 0.4)
        assert n == pytest.approx(KB * 0.4 / (HBAR * PI2 * 2e9) - 0.5, rel=1e-7)
        assert n == pytest.approx(3.7, abs=0.05)

    def test_ground_state_boundary(self):
        t = HBAR * 2 * GHZ / (2 * KB)
        assert trap.equilibrium_nbar(2 * GHZ, t) == pytest.approx(0.0, abs=1e-12)
        assert trap.equilibrium_nbar(2 * GHZ, 0.5 * t) == 0.0

    def test_bose_agreement_at_high_temperature(self):
        x = HBAR * 300 * MHZ / (KB * 60e-3)
        diff = abs(trap.equilibrium_nbar(300 * MHZ, 60e-3) - trap.bose_occupation(300 * MHZ, 60e-3))
        assert diff < x  # leading correction is x/12 relative to kT/hw

    def test_parametric(self):
        assert trap.parametric_cooling_temperature(0.4, 300 * MHZ, 2 * GHZ) == pytest.approx(0.06)
        assert trap.parametric_cooling_temperature(0.4, 1.0, 1.0) == 0.4

    @given(st.floats(0.05, 5.0), st.floats(0.1, 1.0))
    @settings(max_examples=30, deadline=None)
    def test_composition_identity(self, t_t, ratio):
        w_t = 2 * GHZ
        w_a = ratio * w_t
        t_a = trap.parametric_cooling_temperature(t_t, w_a, w_t)
        lhs, rhs = trap.equilibrium_nbar(w_a, t_a), trap.equilibrium_nbar(w_t, t_t)
        assert lhs == pytest.approx(rhs, rel=1e-9, abs=1e-9)

    def test_prototype_axial(self):
        cfg = trap.TrapConfig()
        assert cfg.t_axial == pytest.approx(0.06)
        assert cfg.nbar_axial == pytest.approx(3.667, abs=1e-3)


class TestMicromotion:
    def test_prototype(self):
        x_t, x_mm = trap.micromotion_amplitude(0.53, 2 * GHZ, 0.4)
        assert x_t == pytest.approx(math.sqrt(2 * KB * 0.4 / (ME * (PI2 * 2e9) ** 2)), rel=1e-7)
        assert x_t == pytest.approx(0.28e-6, rel=0.05)
        assert 70e-9 <= x_mm <= 80e-9

    def test_zero_temperature(self):
        assert trap.micromotion_amplitude(0.53, 2 * GHZ, 0.0) == (0.0, 0.0)

    @given(st.floats(0.01, 0.9), st.floats(1e-3, 10.0))
    @settings(max_examples=30, deadline=None)
    def test_ratio(self, q, t):
        x_t, x_mm = trap.micromotion_amplitude(q, 2 * GHZ, t)
        assert x_mm / x_t == pytest.approx(q / 2, rel=1e-12)


class TestSecular:
    def test_prototype(self):
        with pytest.warns(trap.ApproximationWarning):
            w = trap.secular_frequency(0.53, 10.6 * GHZ)
        assert w / PI2 == pytest.approx(1.99e9, rel=2e-3)

    def test_zero_and_no_warning_in_band(self):
        with warnings.catch_warnings():
            warnings.simplefilter("error")
            assert trap.secular_frequency(0.0, 10.6 * GHZ) == 0.0
            trap.secular_frequency(0.3, 10.6 * GHZ)

    def test_mathieu_q_inverse(self):
        w = 10.6 * GHZ
        kappa = 0.53 * ME * w**2 / (2 * E)
        assert trap.mathieu_q(kappa, w) == pytest.approx(0.53, rel=1e-7)

    def test_config_invariants(self):
        with pytest.raises(ValueError):
            trap.TrapConfig(q_param=0.95)
        with pytest.raises(ValueError):
            trap.TrapConfig(omega_a=0.0)


class TestHeating:
    def test_noise_formula(self):
        m = 39.962591 * AMU
        got = trap.heating_rate_from_noise(1e-12, PI2 * 1e6, m)
        assert got == pytest.approx(E**2 * 1e-12 / (4 * m * HBAR * PI2 * 1e6), rel=1e-6)

    def test_noise_zero_and_linear(self):
        assert trap.heating_rate_from_noise(0.0, 1.0) == 0.0
        assert trap.heating_rate_from_noise(2e-12, 1e9) == \
            pytest.approx(2 * trap.heating_rate_from_noise(1e-12, 1e9))
        with pytest.raises(ValueError):
            trap.heating_rate_from_noise(-1.0, 1.0)

    def test_extrapolation_anchor(self):
        got = trap.extrapolate_heating(100, 1 * MHZ, 300 * MHZ, gamma=1.3)
        assert 14 <= got <= 15
        assert got == pytest.approx(14, rel=0.10)

    def test_extrapolation_identity_and_power_law(self):
        assert trap.extrapolate_heating(7.0, 1.0, 1.0, mass_ref=1.0, mass=1.0) == 7.0
        r1 = trap.extrapolate_heating(100, 1e6, 1e7)
        r2 = trap.extrapolate_heating(100, 1e6, 1e8)
        assert r1 / r2 == pytest.approx(10**2.3)

    def test_gamma_warning(self):
        with pytest.warns(trap.ApproximationWarning):
            trap.extrapolate_heating(100, 1e6, 1e8, gamma=2.0)


class TestAnharmonicity:
    def test_prototype(self):
        got = trap.anharmonic_frequency_shift(1.3)
        expect = 0.75 * 1.69 * 1e-7 - 15 / 16 * 1.69**2 * 2e-9
        assert got == pytest.approx(expect, rel=1e-12)
        assert got == pytest.approx(1.2e-7, rel=0.05)

    def test_zero_amplitude(self):
        assert trap.anharmonic_frequency_shift(0.0) == 0.0

    @given(st.floats(0.01, 100.0))
    @settings(max_examples=30, deadline=None)
    def test_quadratic_without_c6(self, a):
        s1 = trap.anharmonic_frequency_shift(a, c6=0.0)
        s2 = trap.anharmonic_frequency_shift(2 * a, c6=0.0)
        assert s2 == pytest.approx(4 * s1, rel=1e-12)

    def test_validity_warning(self):
        with pytest.warns(trap.ApproximationWarning):
            trap.anharmonic_frequency_shift(2000.0)


class TestQubitAndReadout:
    def test_qubit_frequency(self):
        w = trap.qubit_frequency(3.6e-3)
        assert w == pytest.approx(2 * MUB * 3.6e-3 / HBAR, rel=1e-7)
        assert w / PI2 == pytest.approx(100e6, rel=0.01)

    def test_readout_prototype(self):
        nbar = trap.equilibrium_nbar(300 * MHZ, 0.06)
        alpha, fid = trap.readout_displacement(120.0, 10e-6, 300 * MHZ, nbar0=nbar)
        z0 = math.sqrt(HBAR / (2 * ME * PI2 * 300e6))
        assert abs(alpha) == pytest.approx(MUB * 120 * z0 / HBAR * 10e-6, rel=1e-7)
        assert abs(alpha) > 4 * math.sqrt(2 * (2 * nbar + 1))
        assert 1 - fid < 1e-9

    def test_readout_zero_time(self):
        alpha, fid = trap.readout_displacement(120.0, 0.0, 300 * MHZ)
        assert alpha == 0 and fid == 0.5

    @given(st.floats(1e-9, 1e-5), st.floats(1.0, 500.0))
    @settings(max_examples=30, deadline=None)
    def test_readout_linear(self, t, b1):
        a1, _ = trap.readout_displacement(b1, t, 300 * MHZ)
        a2, _ = trap.readout_displacement(2 * b1, t, 300 * MHZ)
        a3, _ = trap.readout_displacement(b1, 2 * t, 300 * MHZ)
        assert abs(a2) == pytest.approx(2 * abs(a1), rel=1e-12)
        assert abs(a3) == pytest.approx(2 * abs(a1), rel=1e-12)

    def test_ground_state_extent(self):
        assert trap.ground_state_extent(300 * MHZ) == \
            pytest.approx(math.sqrt(HBAR / (2 * ME * PI2 * 300e6)), rel=1e-7)
