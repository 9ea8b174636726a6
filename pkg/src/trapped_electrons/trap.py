"""Closed-form trap physics for an electron Paul trap.

All inputs and outputs are SI unless a parameter name says otherwise
(angular frequencies in rad/s, expansion coefficients of the axial
potential in micrometre units as they are usually quoted).
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

from scipy.special import erf

from .constants import E_CHARGE, G_S, GHZ, HBAR, K_B, M_CA40, M_E, MHZ, MU_B, UM

__all__ = [
    "TrapConfig",
    "TankCircuit",
    "ApproximationWarning",
    "cooling_time_constant",
    "equilibrium_nbar",
    "bose_occupation",
    "micromotion_amplitude",
    "parametric_cooling_temperature",
    "secular_frequency",
    "mathieu_q",
    "heating_rate_from_noise",
    "extrapolate_heating",
    "anharmonic_frequency_shift",
    "ground_state_extent",
    "qubit_frequency",
    "readout_displacement",
]


class ApproximationWarning(UserWarning):
    """An input lies outside the validity band of a closed-form approximation."""


@dataclass(frozen=True)
class TrapConfig:
    """Prototype trap parameters (SI; ``c2/c4/c6`` in um^-2, um^-4, um^-6)."""

    u0: float = 14.0
    omega_ac: float = 10.6 * GHZ
    omega_t: float = 2.0 * GHZ
    omega_a: float = 300.0 * MHZ
    q_param: float = 0.53
    d_eff_y: float = 138 * UM
    d_eff_z: float = 254 * UM
    c2: float = 1.0
    c4: float = 1e-7
    c6: float = -2e-9
    b0: float = 3.6e-3
    b1: float = 120.0
    b3: float = 1.5e-7 / UM**3
    t_tank: float = 0.4

    def __post_init__(self):
        for name in ("omega_ac", "omega_t", "omega_a"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if abs(self.q_param) >= 0.908:
            raise ValueError("q_param outside the lowest Mathieu stability region (|q| < 0.908)")

    @property
    def t_axial(self) -> float:
        """Axial temperature reached by parametric coupling to the cooled transverse mode."""
        return parametric_cooling_temperature(self.t_tank, self.omega_a, self.omega_t)

    @property
    def nbar_axial(self) -> float:
        return equilibrium_nbar(self.omega_a, self.t_axial)


@dataclass(frozen=True)
class TankCircuit:
    """Parallel LC tank; the on-resonance impedance is ``Q sqrt(L/C)``."""

    q_factor: float
    capacitance: float
    inductance: float
    temperature: float = 0.4
    impedance: float = field(default=None)

    def __post_init__(self):
        if self.capacitance <= 0 or self.inductance <= 0 or self.q_factor <= 0:
            raise ValueError("q_factor, capacitance and inductance must be positive")
        z = self.q_factor * math.sqrt(self.inductance / self.capacitance)
        if self.impedance is None:
            object.__setattr__(self, "impedance", z)
        elif abs(self.impedance - z) > 1e-9 * z:
            raise ValueError(f"impedance {self.impedance} inconsistent with Q sqrt(L/C) = {z}")

    @property
    def resonance(self) -> float:
        return 1.0 / math.sqrt(self.inductance * self.capacitance)


def cooling_time_constant(d_eff: float, circuit: TankCircuit | float, mass: float = M_E) -> float:
    """Resistive-cooling time constant ``m d_eff^2 / (e^2 Re Z)``.

    ``circuit`` may be a :class:`TankCircuit` or the resistance in ohms.
    """
    r = circuit.impedance if isinstance(circuit, TankCircuit) else float(circuit)
    if r <= 0:
        raise ValueError("Re(Z) must be positive")
    return mass / E_CHARGE**2 * d_eff**2 / r


def equilibrium_nbar(omega: float, temperature: float) -> float:
    """Mean occupation from ``hbar w (n + 1/2) = k_B T``, clamped at zero."""
    if temperature <= 0:
        raise ValueError("temperature must be positive")
    return max(K_B * temperature / (HBAR * omega) - 0.5, 0.0)


def bose_occupation(omega: float, temperature: float) -> float:
    return 1.0 / math.expm1(HBAR * omega / (K_B * temperature))


def micromotion_amplitude(q_param: float, omega_t: float, temperature: float,
                          mass: float = M_E) -> tuple[float, float]:
    """Thermal secular amplitude ``x_t`` and micromotion amplitude ``q x_t / 2``."""
    if temperature < 0:
        raise ValueError("temperature must be non-negative")
    x_t = math.sqrt(2.0 * K_B * temperature / (mass * omega_t**2))
    return x_t, 0.5 * q_param * x_t


def parametric_cooling_temperature(t_t: float, omega_a: float, omega_t: float) -> float:
    if omega_a <= 0 or omega_t <= 0:
        raise ValueError("frequencies must be positive")
    return t_t * omega_a / omega_t


def secular_frequency(q_param: float, omega_ac: float) -> float:
    """Lowest-order pseudopotential secular frequency ``q w_ac / (2 sqrt 2)``."""
    if abs(q_param) > 0.4:
        warnings.warn(f"q={q_param} beyond the small-q validity band (0.4)", ApproximationWarning,
                      stacklevel=2)
    return abs(q_param) * omega_ac / (2.0 * math.sqrt(2.0))


def mathieu_q(gradient: float, omega_ac: float, mass: float = M_E) -> float:
    """Mathieu ``q`` of a quadrupole ``(kappa/2)(x^2 - y^2) cos(w t)`` potential."""
    return 2.0 * E_CHARGE * gradient / (mass * omega_ac**2)


def heating_rate_from_noise(s_e: float, omega_a: float, mass: float = M_E) -> float:
    """Heating rate ``e^2 S / (4 m hbar w)`` in quanta/s; ``S`` in V^2 m^-2 Hz^-1."""
    if s_e < 0:
        raise ValueError("noise density must be non-negative")
    return E_CHARGE**2 * s_e / (4.0 * mass * HBAR * omega_a)


def extrapolate_heating(ndot_ref: float, omega_ref: float, omega: float,
                        mass_ref: float = M_CA40, mass: float = M_E, gamma: float = 1.3) -> float:
    """Scale a measured heating rate to another mass and frequency.

    Assumes ``S ~ 1/w^gamma`` so that ``ndot ~ S/(m w) ~ 1/(m w^(1+gamma))``.
    """
    if not 1.0 <= gamma <= 1.5:
        warnings.warn(f"gamma={gamma} outside the measured band [1, 1.5]", ApproximationWarning,
                      stacklevel=2)
    return (mass_ref / mass) * (omega_ref / omega) ** (1.0 + gamma) * ndot_ref


def anharmonic_frequency_shift(amplitude_um: float, c2: float = 1.0, c4: float = 1e-7,
                               c6: float = -2e-9) -> float:
    """Fractional axial frequency shift at oscillation amplitude ``A`` (um).

    ``(3 A^2 c4 / 4 + 15 A^4 c6 / 16) / c2`` with the potential expanded as
    ``V(0)(1 + c2 z^2 + c4 z^4 + c6 z^6)``.
    """
    a2 = amplitude_um**2
    if a2 and abs(c4 * a2 * a2) > 0.1 * abs(c2 * a2):
        warnings.warn("amplitude outside the perturbative expansion", ApproximationWarning,
                      stacklevel=2)
    return (0.75 * a2 * c4 + 15.0 / 16.0 * a2 * a2 * c6) / c2


def ground_state_extent(omega: float, mass: float = M_E) -> float:
    """``z0 = sqrt(hbar / (2 m w))``; pass ``2*M_E`` for the two-electron COM mode."""
    return math.sqrt(HBAR / (2.0 * mass * omega))


def qubit_frequency(b0: float) -> float:
    """Zeeman splitting ``g_s mu_B B0 / hbar`` in rad/s."""
    return G_S * MU_B * b0 / HBAR


def readout_displacement(b1: float, duration: float, omega_a: float, mass: float = M_E,
                         nbar0: float = 0.0) -> tuple[complex, float]:
    """Spin-dependent displacement from a resonant gradient drive.

    The force ``g_s mu_B b1 / 2`` displaces the mode at rate ``F z0 / hbar``;
    after ``duration`` the two spin states sit at ``+-alpha``. The returned
    discrimination fidelity treats the two outcomes as Gaussians of variance
    ``(2 nbar0 + 1)/2`` per quadrature separated by ``2|alpha|``.
    """
    force = 0.5 * G_S * MU_B * b1
    rate = force * ground_state_extent(omega_a, mass) / HBAR
    alpha = complex(rate * duration)
    width = math.sqrt(2.0 * (2.0 * nbar0 + 1.0))
    return alpha, 0.5 * (1.0 + float(erf(abs(alpha) / width)))
