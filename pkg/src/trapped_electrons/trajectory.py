"""Classical radial motion of a freshly ionized electron in the RF quadrupole.

The drive is an ideal quadrupole ``Phi = (kappa/2)(x^2 - y^2) cos(w t + phi)``
so the two radial coordinates decouple into Mathieu oscillators of opposite
sign. Each trajectory starts at rest and is integrated with velocity Verlet
until it leaves the loss radius or reaches the horizon.
"""
from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numba
import numpy as np

from .constants import E_CHARGE, EV, K_B, M_E
from .trap import TrapConfig

__all__ = [
    "DriveField",
    "TrajectoryOutcome",
    "StabilityMap",
    "TRAP_DEPTH",
    "depth_radius",
    "release_radius",
    "release_energy",
    "default_dt",
    "integrate_trajectory",
    "stability_map",
    "static_energy_drift",
    "threshold_kelvin",
    "secular_frequency_fft",
]

# pseudopotential depth of the prototype trap
TRAP_DEPTH = 80e-3 * EV


@dataclass(frozen=True)
class DriveField:
    """Quadrupole drive with curvature ``gradient`` (V/m^2) at ``omega_ac``.

    ``from_trap`` calibrates the curvature so that the Mathieu ``q`` of an
    electron equals ``TrapConfig.q_param``.
    """

    gradient: float
    omega_ac: float
    omega_t: float
    mass: float = M_E

    def __post_init__(self):
        if self.gradient <= 0 or self.omega_ac <= 0 or self.omega_t <= 0:
            raise ValueError("gradient and frequencies must be positive")

    @classmethod
    def from_trap(cls, trap: TrapConfig | None = None, mass: float = M_E) -> "DriveField":
        trap = trap or TrapConfig()
        kappa = trap.q_param * mass * trap.omega_ac**2 / (2.0 * E_CHARGE)
        return cls(kappa, trap.omega_ac, trap.omega_t, mass)

    @property
    def q_param(self) -> float:
        return 2.0 * E_CHARGE * self.gradient / (self.mass * self.omega_ac**2)

    @property
    def accel(self) -> float:
        """Peak acceleration per unit displacement, ``e kappa / m``."""
        return E_CHARGE * self.gradient / self.mass


@dataclass(frozen=True)
class TrajectoryOutcome:
    initial_energy: float  # eV
    phi: float
    storage_time: float
    lost: bool
    max_radius: float


@dataclass
class StabilityMap:
    energies: np.ndarray  # eV
    phis: np.ndarray
    storage_time: np.ndarray  # (n_energy, n_phi)
    lost: np.ndarray
    horizon: float

    def outcomes(self) -> list[TrajectoryOutcome]:
        """Rows in energy-major order."""
        return [
            TrajectoryOutcome(float(e), float(p), float(self.storage_time[i, j]),
                              bool(self.lost[i, j]), math.nan)
            for i, e in enumerate(self.energies) for j, p in enumerate(self.phis)
        ]

    def stable_threshold(self) -> float:
        """Largest grid energy (eV) below which every phase survives the horizon.

        Returns the last energy of the leading run of all-stable rows; 0 when
        the first row already loses electrons.
        """
        ok = ~self.lost.any(axis=1)
        if ok.all():
            return float(self.energies[-1])
        first_bad = int(np.argmin(ok))
        return float(self.energies[first_bad - 1]) if first_bad > 0 else 0.0

    def survival_by_phase(self, energy_min: float | None = None) -> np.ndarray:
        """Mean storage time per phase over rows above ``energy_min``."""
        rows = self.energies > (self.stable_threshold() if energy_min is None else energy_min)
        if not rows.any():
            return np.full(len(self.phis), self.horizon)
        return self.storage_time[rows].mean(axis=0)


def depth_radius(drive: DriveField, depth: float = TRAP_DEPTH) -> float:
    """Radius at which the pseudopotential reaches ``depth`` (J)."""
    return math.sqrt(2.0 * depth / (drive.mass * drive.omega_t**2))


def release_radius(energy_ev: float, drive: DriveField) -> float:
    """Distance from the centre at which the pseudopotential equals ``energy_ev``."""
    if energy_ev < 0:
        raise ValueError("energy must be non-negative")
    return math.sqrt(2.0 * energy_ev * EV / (drive.mass * drive.omega_t**2))


def release_energy(radius: float, drive: DriveField) -> float:
    return 0.5 * drive.mass * drive.omega_t**2 * radius**2 / EV


def default_dt(drive: DriveField, points_per_cycle: int = 64) -> float:
    return 2.0 * math.pi / drive.omega_ac / points_per_cycle


@numba.njit(cache=True)
def _verlet(x, y, vx, vy, k, w, phi, dt, n_steps, r_loss):
    # a_x = +k cos(w t + phi) x, a_y = -k cos(w t + phi) y  (electron charge -e)
    r2 = r_loss * r_loss
    c = k * math.cos(phi)
    ax = c * x
    ay = -c * y
    rmax2 = x * x + y * y
    for i in range(n_steps):
        vx += 0.5 * dt * ax
        vy += 0.5 * dt * ay
        x += dt * vx
        y += dt * vy
        c = k * math.cos(w * (i + 1) * dt + phi)
        ax = c * x
        ay = -c * y
        vx += 0.5 * dt * ax
        vy += 0.5 * dt * ay
        rr = x * x + y * y
        if rr > rmax2:
            rmax2 = rr
        if rr > r2:
            return i + 1, math.sqrt(rmax2)
    return n_steps, math.sqrt(rmax2)


@numba.njit(cache=True)
def _verlet_static(x, vx, w2, dt, n_steps, stride):
    # harmonic pseudopotential, records x and v every ``stride`` steps
    n_out = n_steps // stride
    xs = np.empty(n_out)
    vs = np.empty(n_out)
    a = -w2 * x
    j = 0
    for i in range(n_steps):
        vx += 0.5 * dt * a
        x += dt * vx
        a = -w2 * x
        vx += 0.5 * dt * a
        if (i + 1) % stride == 0 and j < n_out:
            xs[j] = x
            vs[j] = vx
            j += 1
    return xs, vs


@numba.njit(cache=True)
def _sample(x, y, k, w, phi, dt, n_steps, stride):
    n_out = n_steps // stride
    xs = np.empty(n_out)
    ys = np.empty(n_out)
    vx = 0.0
    vy = 0.0
    c = k * math.cos(phi)
    ax = c * x
    ay = -c * y
    j = 0
    for i in range(n_steps):
        vx += 0.5 * dt * ax
        vy += 0.5 * dt * ay
        x += dt * vx
        y += dt * vy
        c = k * math.cos(w * (i + 1) * dt + phi)
        ax = c * x
        ay = -c * y
        vx += 0.5 * dt * ax
        vy += 0.5 * dt * ay
        if (i + 1) % stride == 0 and j < n_out:
            xs[j] = x
            ys[j] = y
            j += 1
    return xs, ys


def _direction(angle: float) -> tuple[float, float]:
    return math.cos(angle), math.sin(angle)


def integrate_trajectory(release_pos: tuple[float, float], phi: float, drive: DriveField,
                         horizon: float = 100e-6, dt: float | None = None,
                         loss_radius: float | None = None) -> TrajectoryOutcome:
    """Follow an electron released at rest from ``release_pos`` (m).

    ``phi`` is the drive phase at release. The electron counts as lost the
    first time its radius exceeds ``loss_radius`` (default: the radius where
    the pseudopotential reaches the trap depth).
    """
    dt = default_dt(drive) if dt is None else dt
    r_loss = depth_radius(drive) if loss_radius is None else loss_radius
    x0, y0 = (float(v) for v in release_pos)
    r0 = math.hypot(x0, y0)
    if r0 >= r_loss:
        raise ValueError(f"release radius {r0:.3g} m is outside the trap volume ({r_loss:.3g} m)")
    if dt <= 0 or horizon <= 0:
        raise ValueError("dt and horizon must be positive")
    n_steps = int(math.ceil(horizon / dt))
    steps, rmax = _verlet(x0, y0, 0.0, 0.0, drive.accel, drive.omega_ac, float(phi), dt, n_steps,
                          r_loss)
    lost = steps < n_steps
    t_store = steps * dt if lost else horizon
    return TrajectoryOutcome(release_energy(r0, drive), float(phi), t_store, lost, rmax)


def _map_row(args):
    energy, phis, drive, horizon, dt, loss_radius, angle = args
    r = release_radius(energy, drive)
    ux, uy = _direction(angle)
    out = [integrate_trajectory((r * ux, r * uy), p, drive, horizon, dt, loss_radius) for p in phis]
    return [o.storage_time for o in out], [o.lost for o in out]


def stability_map(energy_grid, phi_grid, drive: DriveField | None = None, horizon: float = 10e-6,
                  dt: float | None = None, loss_radius: float | None = None,
                  release_angle: float = math.pi / 4, threads: int = 1) -> StabilityMap:
    """Storage time over the cartesian product of release energies (eV) and phases.

    Rows are independent and may be farmed out to ``threads`` processes; the
    output order is always energy-major, phase-minor.
    """
    energies = np.asarray(energy_grid, dtype=float)
    phis = np.asarray(phi_grid, dtype=float)
    if energies.size == 0 or phis.size == 0:
        raise ValueError("energy and phase grids must be non-empty")
    drive = drive or DriveField.from_trap()
    jobs = [(float(e), phis, drive, horizon, dt, loss_radius, release_angle) for e in energies]
    if threads > 1:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            rows = list(pool.map(_map_row, jobs))
    else:
        rows = [_map_row(j) for j in jobs]
    st = np.array([r[0] for r in rows])
    lost = np.array([r[1] for r in rows], dtype=bool)
    return StabilityMap(energies, phis, st, lost, horizon)


def static_energy_drift(drive: DriveField | None = None, horizon: float = 100e-6,
                        dt: float | None = None, amplitude: float = 5e-6) -> float:
    """Relative energy drift of Verlet in the static pseudopotential.

    Velocity Verlet conserves a shadow energy, so the instantaneous energy
    oscillates at the ``(w dt)^2`` level without drifting. The drift is taken
    as the change of the energy averaged over the first and last 2000 samples
    (many secular periods), which isolates secular growth from that bounded
    oscillation.
    """
    drive = drive or DriveField.from_trap()
    dt = default_dt(drive) if dt is None else dt
    w2 = drive.omega_t**2
    n_steps = int(math.ceil(horizon / dt))
    stride = 7  # incommensurate with the secular period
    xs, vs = _verlet_static(amplitude, 0.0, w2, dt, n_steps, stride)
    e = 0.5 * vs**2 + 0.5 * w2 * xs**2
    e0 = 0.5 * w2 * amplitude**2
    m = min(2000, len(e) // 4)
    return float(abs(e[-m:].mean() - e[:m].mean()) / e0)


def secular_frequency_fft(drive: DriveField | None = None, amplitude: float = 0.5e-6,
                          duration: float = 200e-9, dt: float | None = None) -> float:
    """Dominant low-frequency component (rad/s) of a small-amplitude trajectory."""
    drive = drive or DriveField.from_trap()
    dt = default_dt(drive) if dt is None else dt
    n_steps = int(math.ceil(duration / dt))
    xs, _ = _sample(amplitude, 0.0, drive.accel, drive.omega_ac, 0.0, dt, n_steps, 1)
    xs = xs - xs.mean()
    n_fft = 16 * len(xs)
    spec = np.abs(np.fft.rfft(xs * np.hanning(len(xs)), n_fft))
    freqs = np.fft.rfftfreq(n_fft, dt) * 2.0 * math.pi
    band = freqs < 0.5 * drive.omega_ac
    return float(freqs[band][np.argmax(spec[band])])


def threshold_kelvin(energy_ev: float) -> float:
    return energy_ev * EV / K_B
