"""Closed-form numbers for the prototype electron trap.

Prints the cooling, occupation, micromotion, heating and anharmonicity
figures that set the scale for the gate simulations.

    python3 demos/trap_numbers.py
"""
import warnings

from trapped_electrons import trap
from trapped_electrons.constants import GHZ, M_CA40, MHZ, TWO_PI, UM

cfg = trap.TrapConfig()

tau_y = trap.cooling_time_constant(cfg.d_eff_y, 80e3)
tau_z = trap.cooling_time_constant(cfg.d_eff_z, 500e3)
print(f"resistive cooling: tau_y = {tau_y * 1e6:.2f} us, tau_z = {tau_z * 1e6:.2f} us")

nbar_t = trap.equilibrium_nbar(cfg.omega_t, cfg.t_tank)
print(f"transverse mode at {cfg.t_tank} K: nbar = {nbar_t:.2f}")
print(f"axial mode after parametric coupling: T = {cfg.t_axial * 1e3:.0f} mK, "
      f"nbar = {cfg.nbar_axial:.3f}")

x_t, x_mm = trap.micromotion_amplitude(cfg.q_param, cfg.omega_t, cfg.t_tank)
print(f"thermal amplitude {x_t * 1e6:.3f} um, micromotion {x_mm * 1e9:.0f} nm")

with warnings.catch_warnings():
    warnings.simplefilter("ignore", trap.ApproximationWarning)
    w_sec = trap.secular_frequency(cfg.q_param, cfg.omega_ac)
print(f"lowest-order secular frequency: {w_sec / TWO_PI / 1e9:.3f} GHz "
      f"(q = {cfg.q_param}, beyond the small-q band)")

ndot_ca = trap.heating_rate_from_noise(1e-12, 1 * MHZ, M_CA40)
ndot_e = trap.extrapolate_heating(100.0, 1 * MHZ, cfg.omega_a, gamma=1.3)
print(f"heating: Ca+ at 1 MHz from 1e-12 V^2/m^2/Hz -> {ndot_ca:.0f} quanta/s; "
      f"100 quanta/s scaled to an electron at 300 MHz -> {ndot_e:.1f} quanta/s")

shift = trap.anharmonic_frequency_shift(1.3, cfg.c2, cfg.c4, cfg.c6)
print(f"anharmonic shift at 1.3 um amplitude: {shift:.2e}")

w_q = trap.qubit_frequency(cfg.b0)
alpha, fid = trap.readout_displacement(cfg.b1, 10e-6, cfg.omega_a, nbar0=cfg.nbar_axial)
print(f"qubit splitting {w_q / TWO_PI / 1e6:.1f} MHz; 10 us readout pulse displaces by "
      f"|alpha| = {abs(alpha):.1f}, discrimination 1 - F = {1 - fid:.1e}")
print(f"ground-state extent z0 = {trap.ground_state_extent(cfg.omega_a) / UM * 1e3:.0f} nm "
      f"at {cfg.omega_a / TWO_PI / 1e6:.0f} MHz; omega_ac = {cfg.omega_ac / GHZ:.1f} GHz")
