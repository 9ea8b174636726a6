"""sigma_z (x) sigma_z geometric-phase gate between two electrons, with error channels.

The drive is the interaction-picture spin-dependent force

    H_g(t) = Omega_R s(t) (I (x) sz + sz (x) I) (a e^{-i delta t} + a^dag e^{i delta t})

where ``s(t) = +-1`` follows a Walsh sign pattern, one closed phase-space
loop per segment. Every operator used here is diagonal in the spin
z-basis, so runs go through :func:`~trapped_electrons.lindblad.evolve_block_diagonal`
unless ``dense=True`` is requested.
"""
from __future__ import annotations

import math
from bisect import bisect_right
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from functools import lru_cache
from typing import Iterable, Sequence, Union

import numpy as np
from scipy.optimize import brentq, minimize_scalar

from . import operators as ops
from .constants import HBAR, KHZ, M_E, TWO_PI, UM
from .lindblad import (SolverSettings, TimeDependentHamiltonian, evolve, evolve_block_diagonal,
                       lindblad_term)
from .trap import TrapConfig, ground_state_extent

__all__ = [
    "WALSH_SIGNS",
    "GateSchedule",
    "Heating",
    "TrapFrequencyOffset",
    "MotionalDephasing",
    "GradientInhomogeneity",
    "Anharmonicity",
    "QubitDecoherence",
    "ErrorChannel",
    "CHANNEL_TYPES",
    "GateResult",
    "table_one_channels",
    "ideal_gate_phase",
    "bell_target",
    "local_correction",
    "build_gate_hamiltonian",
    "build_error_terms",
    "initial_state",
    "calibrate_rabi",
    "calibrated_schedule",
    "run_gate",
    "sweep",
    "error_budget",
    "ideal_rabi",
    "with_magnitude",
    "default_cutoff",
    "DEFAULT_T_GATE",
    "DEFAULT_SETTINGS",
    "GATE_TAIL_TOL",
]

WALSH_SIGNS = {0: (1,), 1: (1, -1), 3: (1, -1, -1, 1)}
DEFAULT_T_GATE = 2e-6
# 1200 RK4 steps per loop keep the step error of the strongest (Walsh 0) loop on a
# thermal state near 2e-10; the residual from truncating the thermal tail is
# roughly ten times the discarded weight, hence the 1e-11 tail tolerance
DEFAULT_SETTINGS = SolverSettings(steps_per_period=1200)
GATE_TAIL_TOL = 1e-11


@dataclass(frozen=True)
class GateSchedule:
    """Segmented drive: one closed loop of duration ``2 pi / delta`` per segment.

    Attributes
    ----------
    walsh_order : int
        0 (no modulation), 1 or 3.
    delta : float
        Force detuning from the axial mode, rad/s.
    rabi : float
        Gate Rabi frequency ``Omega_R``, rad/s.
    segments : tuple of (sign, duration)
    """

    walsh_order: int
    delta: float
    rabi: float
    segments: tuple[tuple[int, float], ...] = ()

    def __post_init__(self):
        if self.walsh_order not in WALSH_SIGNS:
            raise ValueError(f"walsh_order must be one of {sorted(WALSH_SIGNS)}")
        if self.delta <= 0:
            raise ValueError("delta must be positive")
        if not self.segments:
            loop = TWO_PI / self.delta
            object.__setattr__(self, "segments",
                               tuple((s, loop) for s in WALSH_SIGNS[self.walsh_order]))
        signs = tuple(s for s, _ in self.segments)
        if signs != WALSH_SIGNS[self.walsh_order]:
            raise ValueError(f"segment signs {signs} do not match Walsh {self.walsh_order}")
        durations = [d for _, d in self.segments]
        if any(d <= 0 for d in durations) or max(durations) - min(durations) > 1e-12 * max(durations):
            raise ValueError("segments must have equal positive durations")
        self._set_boundaries()

    @classmethod
    def standard(cls, walsh_order: int, t_loop: float = DEFAULT_T_GATE,
                 rabi: float | None = None) -> "GateSchedule":
        """Schedule with ``delta = 2 pi / t_loop``; Walsh order ``n`` segments take ``n t_loop``.

        ``rabi`` defaults to the analytic value ``delta / (4 sqrt n)``.
        """
        delta = TWO_PI / t_loop
        if rabi is None:
            rabi = ideal_rabi(walsh_order, delta)
        return cls(walsh_order, delta, rabi)

    @property
    def duration(self) -> float:
        return sum(d for _, d in self.segments)

    @property
    def loops(self) -> int:
        return len(self.segments)

    @property
    def boundaries(self) -> tuple[float, ...]:
        return self._boundaries

    def _set_boundaries(self):
        edges = np.cumsum([d for _, d in self.segments])
        object.__setattr__(self, "_boundaries", tuple(float(e) for e in edges[:-1]))

    def sign(self, t: float) -> int:
        """Drive sign on ``[start, end)`` of each segment."""
        return self.segments[bisect_right(self.boundaries, t)][0]

    def with_rabi(self, rabi: float) -> "GateSchedule":
        return replace(self, rabi=rabi)


def ideal_rabi(walsh_order: int, delta: float) -> float:
    """Rabi frequency giving a pi/4 sz (x) sz phase from ``n`` closed loops: ``delta / (4 sqrt n)``."""
    return delta / (4.0 * math.sqrt(len(WALSH_SIGNS[walsh_order])))


def ideal_gate_phase(schedule: GateSchedule) -> float:
    """Coefficient ``theta`` of the ideal unitary ``exp(-i theta sz (x) sz)``.

    Each closed loop with force ``f = Omega_R S`` contributes the geometric
    phase ``exp(+2 pi i f^2 / delta^2)`` and ``S^2 = 2 + 2 sz (x) sz``.
    """
    return -4.0 * math.pi * schedule.loops * schedule.rabi**2 / schedule.delta**2


# ---------------------------------------------------------------------------
# error channels


@dataclass(frozen=True)
class Heating:
    """Motional heating, ``L = sqrt(rate) a`` and ``sqrt(rate) a^dag``; rate in quanta/s."""

    rate: float = 140.0
    kind = "heating"

    @property
    def magnitude(self) -> float:
        return self.rate


@dataclass(frozen=True)
class TrapFrequencyOffset:
    """Quasi-static mode detuning ``H = Delta a^dag a``; ``delta`` in rad/s."""

    delta: float = 3.0 * KHZ
    kind = "trap_freq_offset"

    @property
    def magnitude(self) -> float:
        return self.delta


@dataclass(frozen=True)
class MotionalDephasing:
    """``L = sqrt(rate) a^dag a``; rate in rad/s."""

    rate: float = TWO_PI * 1.8e-3
    kind = "motional_dephasing"

    @property
    def magnitude(self) -> float:
        return self.rate


def _mode_extent(omega_a: float = TrapConfig().omega_a) -> float:
    return ground_state_extent(omega_a, M_E)


@dataclass(frozen=True)
class GradientInhomogeneity:
    """Third-order field expansion ``B3`` (T/m^3) relative to the gradient ``B1`` (T/m).

    ``z0`` is the ground-state extent entering ``Omega_in / Omega_R = 3 z0^2 B3 / B1``;
    the default uses the single-electron mass at the axial frequency.
    """

    b3: float = 1.5e-7 / UM**3
    b1: float = 120.0
    z0: float = field(default_factory=_mode_extent)
    kind = "gradient_inhomogeneity"

    @property
    def magnitude(self) -> float:
        return self.b3

    @property
    def ratio(self) -> float:
        return 3.0 * self.z0**2 * self.b3 / self.b1


@dataclass(frozen=True)
class Anharmonicity:
    """Quartic term ``V(0) c4 z0^4 (a + a^dag)^4`` of the axial potential.

    ``c4_over_c2`` is in m^-2. ``V(0) c2`` is fixed by the harmonic term of
    the two-electron crystal, ``V(0) c2 = potential_mass omega_a^2 / 2`` with
    ``potential_mass = 2 m_e``; ``z0`` is the extent used for the mode
    operators (single-electron mass by default, as for the gradient channel).
    """

    c4_over_c2: float = 1e-7 / UM**2
    omega_a: float = TrapConfig().omega_a
    z0: float = field(default_factory=_mode_extent)
    potential_mass: float = 2 * M_E
    kind = "anharmonicity"

    @property
    def magnitude(self) -> float:
        return self.c4_over_c2

    @property
    def quartic_rate(self) -> float:
        """Prefactor of ``(a + a^dag)^4`` in rad/s."""
        v0 = 0.5 * self.potential_mass * self.omega_a**2
        return self.c4_over_c2 * v0 * self.z0**4 / HBAR


@dataclass(frozen=True)
class QubitDecoherence:
    """Spin dephasing ``L = sqrt(1/(2 tau)) sz`` on each qubit; ``tau_spin`` in s."""

    tau_spin: float = 1.0
    kind = "qubit_decoherence"

    @property
    def magnitude(self) -> float:
        return self.tau_spin


ErrorChannel = Union[Heating, TrapFrequencyOffset, MotionalDephasing, GradientInhomogeneity,
                     Anharmonicity, QubitDecoherence]

CHANNEL_TYPES = {c.kind: c for c in (Heating, TrapFrequencyOffset, MotionalDephasing,
                                     GradientInhomogeneity, Anharmonicity, QubitDecoherence)}

_MAGNITUDE_FIELD = {"heating": "rate", "trap_freq_offset": "delta", "motional_dephasing": "rate",
                    "gradient_inhomogeneity": "b3", "anharmonicity": "c4_over_c2",
                    "qubit_decoherence": "tau_spin"}


def _validate_channel(ch: ErrorChannel) -> None:
    for name in ("rate", "delta", "b3", "b1", "z0", "c4_over_c2", "tau_spin", "omega_a",
                 "potential_mass"):
        value = getattr(ch, name, None)
        if value is not None and value < 0:
            raise ValueError(f"{ch.kind}.{name} must be non-negative, got {value}")
    if isinstance(ch, GradientInhomogeneity) and ch.b3 and ch.b1 <= 0:
        raise ValueError("gradient_inhomogeneity.b1 must be positive")


def with_magnitude(channel: ErrorChannel, value: float) -> ErrorChannel:
    return replace(channel, **{_MAGNITUDE_FIELD[channel.kind]: value})


def table_one_channels(trap: TrapConfig = TrapConfig()) -> list[ErrorChannel]:
    """The six channels at the magnitudes of the reference error budget, in column order."""
    z0 = _mode_extent(trap.omega_a)
    return [
        Heating(140.0),
        TrapFrequencyOffset(3.0 * KHZ),
        MotionalDephasing(TWO_PI * 1.8e-3),
        GradientInhomogeneity(b3=trap.b3, b1=trap.b1, z0=z0),
        Anharmonicity(trap.c4 / trap.c2 / UM**2, omega_a=trap.omega_a, z0=z0),
        QubitDecoherence(1.0),
    ]


# ---------------------------------------------------------------------------
# operators


def _mode_ops(spec: ops.HilbertSpec):
    a = ops.lowering_operator(spec)
    return a, a.conj().T


def build_gate_hamiltonian(schedule: GateSchedule, spec: ops.HilbertSpec,
                           strength: float | None = None) -> TimeDependentHamiltonian:
    """Walsh-modulated force Hamiltonian on the composite space (rad/s).

    ``strength`` overrides ``schedule.rabi``; the inhomogeneity channel reuses
    this builder with its own operator and prefactor.
    """
    a, ad = _mode_ops(spec)
    force = ops.spin_sum_z(spec)
    return _driven(schedule, force @ a, force @ ad,
                   schedule.rabi if strength is None else strength)


def _driven(schedule: GateSchedule, lower: np.ndarray, upper: np.ndarray,
            strength: float) -> TimeDependentHamiltonian:
    delta = schedule.delta
    sign = schedule.sign
    return TimeDependentHamiltonian(
        (
            (lambda t: strength * sign(t) * np.exp(-1j * delta * t), lower),
            (lambda t: strength * sign(t) * np.exp(1j * delta * t), upper),
        ),
        breakpoints=schedule.boundaries,
        period=TWO_PI / delta,
    )


def build_error_terms(channel: ErrorChannel, schedule: GateSchedule, spec: ops.HilbertSpec
                      ) -> tuple[TimeDependentHamiltonian | None, list[np.ndarray]]:
    """Hamiltonian additions and jump operators for one error channel.

    Returns ``(None, [])`` when the channel magnitude is zero.
    """
    _validate_channel(channel)
    a, ad = _mode_ops(spec)
    num = ad @ a
    if isinstance(channel, Heating):
        if channel.rate == 0:
            return None, []
        return None, [lindblad_term(a, channel.rate), lindblad_term(ad, channel.rate)]
    if isinstance(channel, TrapFrequencyOffset):
        if channel.delta == 0:
            return None, []
        return TimeDependentHamiltonian.constant(channel.delta * num), []
    if isinstance(channel, MotionalDephasing):
        if channel.rate == 0:
            return None, []
        return None, [lindblad_term(num, channel.rate)]
    if isinstance(channel, GradientInhomogeneity):
        if channel.b3 == 0:
            return None, []
        force = ops.spin_sum_z(spec)
        omega_in = schedule.rabi * channel.ratio
        return _driven(schedule, force @ a @ ad @ a, force @ ad @ a @ ad, 3.0 * omega_in), []
    if isinstance(channel, Anharmonicity):
        if channel.c4_over_c2 == 0:
            return None, []
        x = a + ad
        return TimeDependentHamiltonian.constant(channel.quartic_rate * (x @ x @ x @ x)), []
    if isinstance(channel, QubitDecoherence):
        if math.isinf(channel.tau_spin):
            return None, []
        if channel.tau_spin <= 0:
            raise ValueError("tau_spin must be positive")
        rate = 1.0 / (2.0 * channel.tau_spin)
        return None, [lindblad_term(ops.pauli_z(spec, k), rate) for k in range(spec.spin_count)]
    raise TypeError(f"unknown error channel {channel!r}")


# ---------------------------------------------------------------------------
# states and targets


def bell_target() -> np.ndarray:
    """``(|up up> + |down down>)/sqrt 2`` in the (up, down) ordering."""
    return np.array([1.0, 0.0, 0.0, 1.0], dtype=complex) / math.sqrt(2.0)


def _zz_unitary(theta: float) -> np.ndarray:
    zz = np.array([1.0, -1.0, -1.0, 1.0])
    return np.diag(np.exp(-1j * theta * zz))


@lru_cache(maxsize=8)
def _local_correction(theta: float) -> np.ndarray:
    plus = ops.plus_state()
    ideal = _zz_unitary(theta) @ np.kron(plus, plus)
    u, s, vh = np.linalg.svd(ideal.reshape(2, 2))
    # V1 M V2^T = diag(s) = I/sqrt2 for a maximally entangled M
    return np.kron(u.conj().T, vh.conj())


def local_correction(theta: float = -math.pi / 4) -> np.ndarray:
    """Product unitary ``V1 (x) V2`` taking ``exp(-i theta ZZ)|++>`` to the Bell target."""
    return _local_correction(round(theta, 15)).copy()


def initial_state(spec: ops.HilbertSpec, nbar0: float, tail_tol: float = GATE_TAIL_TOL) -> np.ndarray:
    """``|++><++| (x) thermal(nbar0)`` on the composite space."""
    plus = ops.plus_state()
    spin = np.kron(plus, plus)
    return np.kron(np.outer(spin, spin.conj()), ops.thermal_state(spec, nbar0, tail_tol))


# ---------------------------------------------------------------------------
# simulation


@dataclass
class GateResult:
    bell_fidelity: float
    infidelity: float
    final_spin_state: np.ndarray
    schedule: GateSchedule
    trace_drift: float
    truncation_delta: float | None = None
    fock_cutoff: int = 0
    min_eigenvalue: float = 0.0

    def __post_init__(self):
        if not 0.0 <= self.bell_fidelity <= 1.0:
            raise ValueError("fidelity outside [0, 1]")


def _simulate(schedule: GateSchedule, channels: Sequence[ErrorChannel], nbar0: float,
              spec: ops.HilbertSpec, settings: SolverSettings, dense: bool,
              tail_tol: float = GATE_TAIL_TOL):
    h = build_gate_hamiltonian(schedule, spec)
    jumps: list[np.ndarray] = []
    for ch in channels:
        extra, ls = build_error_terms(ch, schedule, spec)
        if extra is not None:
            h = h + extra
        jumps.extend(ls)
    rho0 = initial_state(spec, nbar0, tail_tol)
    span = (0.0, schedule.duration)
    if dense:
        rho = evolve(rho0, h, jumps, span, settings)
        drift = abs(np.trace(rho) - 1.0)
    else:
        rho, drift = evolve_block_diagonal(rho0, h, jumps, span, spec.spin_dim, settings)
    spin = ops.partial_trace_motion(rho, spec)
    corr = local_correction()  # fixed: a mis-set Rabi frequency must show up as infidelity
    spin = corr @ spin @ corr.conj().T
    return spin, float(drift)


def run_gate(schedule: GateSchedule, errors: Sequence[ErrorChannel] = (), nbar0: float = 0.0,
             settings: SolverSettings = DEFAULT_SETTINGS, spec: ops.HilbertSpec | None = None,
             check_truncation: bool = False, dense: bool = False,
             tail_tol: float = GATE_TAIL_TOL) -> GateResult:
    """Simulate one gate from ``|++> (x) thermal(nbar0)`` and score the Bell fidelity.

    Parameters
    ----------
    schedule : GateSchedule
        Calibrated schedule (see :func:`calibrated_schedule`).
    errors : sequence of error channels
        Applied together.
    nbar0 : float
        Initial thermal occupation of the gate mode.
    settings : SolverSettings
    spec : HilbertSpec, optional
        Defaults to :func:`default_cutoff` for ``nbar0`` and ``tail_tol``.
    check_truncation : bool
        Repeat with ``N + 10`` Fock levels and report the fidelity change.
    dense : bool
        Use the dense ``4N x 4N`` integrator instead of spin blocks.
    tail_tol : float
        Largest thermal population weight allowed beyond the Fock cutoff.
    """
    errors = list(errors)
    if spec is None:
        spec = ops.HilbertSpec(default_cutoff(nbar0, tail_tol))
    spin, drift = _simulate(schedule, errors, nbar0, spec, settings, dense, tail_tol)
    fid = ops.bell_fidelity(spin, bell_target())
    delta = None
    if check_truncation:
        bigger = ops.HilbertSpec(spec.fock_cutoff + 10, spec.spin_count)
        spin2, _ = _simulate(schedule, errors, nbar0, bigger, settings, dense, tail_tol)
        delta = abs(ops.bell_fidelity(spin2, bell_target()) - fid)
    return GateResult(
        bell_fidelity=fid, infidelity=1.0 - fid, final_spin_state=spin, schedule=schedule,
        trace_drift=drift, truncation_delta=delta, fock_cutoff=spec.fock_cutoff,
        min_eigenvalue=float(np.linalg.eigvalsh(spin).min()),
    )


def default_cutoff(nbar0: float, tail_tol: float = GATE_TAIL_TOL, minimum: int = 20) -> int:
    """Smallest multiple of 10 (>= ``minimum``) keeping the thermal tail below ``tail_tol``."""
    if nbar0 <= 0:
        return minimum
    n = math.ceil(math.log(tail_tol) / math.log(nbar0 / (nbar0 + 1.0)))
    return max(minimum, 10 * math.ceil(n / 10))


def _spin_phase(schedule: GateSchedule, settings: SolverSettings, spec: ops.HilbertSpec) -> float:
    """Accumulated ``sz (x) sz`` angle, read from the ``<up up|rho|up down>`` coherence."""
    h = build_gate_hamiltonian(schedule, spec)
    rho, _ = evolve_block_diagonal(initial_state(spec, 0.0), h, [], (0.0, schedule.duration),
                                   spec.spin_dim, settings)
    spin = ops.partial_trace_motion(rho, spec)
    # rho_{00,01} = |c|^2 exp(-2 i theta) for exp(-i theta ZZ)
    return -0.5 * float(np.angle(spin[0, 1]))


def calibrate_rabi(walsh_order: int, delta: float | None = None, spec: ops.HilbertSpec | None = None,
                   settings: SolverSettings = DEFAULT_SETTINGS, t_gate: float = DEFAULT_T_GATE,
                   polish: bool = True) -> float:
    """Find ``Omega_R`` giving the Bell target from the noiseless gate.

    A root of the accumulated phase ``theta(Omega) = -pi/4`` is bracketed
    around the analytic value ``delta/(4 sqrt n)`` and refined with Brent's
    method; with ``polish`` the simulated infidelity is then minimized in a
    +-1e-4 relative window and the better of the two is kept. ``delta``
    defaults to one loop per segment of duration ``t_gate``.
    """
    if delta is None:
        delta = TWO_PI / t_gate
    if spec is None:
        spec = ops.HilbertSpec(16)
    seed = ideal_rabi(walsh_order, delta)

    def phase_error(rabi):
        return _spin_phase(GateSchedule(walsh_order, delta, rabi), settings, spec) + math.pi / 4

    lo, hi = 0.9 * seed, 1.1 * seed
    if phase_error(lo) * phase_error(hi) > 0:
        raise ValueError("no phase root in calibration bracket; check sign conventions")
    rabi = brentq(phase_error, lo, hi, xtol=1e-14 * seed, rtol=1e-14)
    if not polish:
        return rabi

    def infid(r):
        return run_gate(GateSchedule(walsh_order, delta, r), (), 0.0, settings, spec).infidelity

    width = 1e-4 * seed
    res = minimize_scalar(infid, bounds=(rabi - width, rabi + width), method="bounded",
                          options={"xatol": 1e-9 * seed})
    return float(res.x) if res.fun < infid(rabi) else rabi


@lru_cache(maxsize=64)
def _cached_calibration(walsh_order: int, delta: float, settings: SolverSettings) -> float:
    return calibrate_rabi(walsh_order, delta, settings=settings)


def calibrated_schedule(walsh_order: int, t_gate: float = DEFAULT_T_GATE,
                        settings: SolverSettings = DEFAULT_SETTINGS) -> GateSchedule:
    """One loop of ``t_gate`` per Walsh segment with a calibrated (memoized) Rabi frequency."""
    delta = TWO_PI / t_gate
    return GateSchedule(walsh_order, delta, _cached_calibration(walsh_order, delta, settings))


# ---------------------------------------------------------------------------
# sweeps and budget


def _sweep_point(args):
    channel, magnitude, walsh, t_gate, nbar0, settings, fock_cutoff = args
    schedule = calibrated_schedule(walsh, t_gate, settings)
    spec = ops.HilbertSpec(fock_cutoff) if fock_cutoff else None
    res = run_gate(schedule, [with_magnitude(channel, magnitude)], nbar0, settings, spec)
    return {"channel": channel.kind, "magnitude": magnitude, "walsh": walsh,
            "infidelity": res.infidelity, "trace_drift": res.trace_drift,
            "min_eigenvalue": res.min_eigenvalue}


def sweep(channel: ErrorChannel, magnitudes: Iterable[float], walsh_orders: Iterable[int] = (0, 1, 3),
          settings: SolverSettings = DEFAULT_SETTINGS, nbar0: float | None = None,
          t_gate: float = DEFAULT_T_GATE, fock_cutoff: int | None = None,
          threads: int = 1) -> list[dict]:
    """Infidelity over a grid of magnitudes and Walsh orders.

    Rows come back ordered by magnitude, then Walsh order, whatever the
    number of worker processes.
    """
    magnitudes = [float(m) for m in magnitudes]
    if magnitudes != sorted(magnitudes):
        raise ValueError("magnitudes must be sorted ascending")
    if nbar0 is None:
        nbar0 = TrapConfig().nbar_axial
    jobs = [(channel, m, w, t_gate, nbar0, settings, fock_cutoff)
            for m in magnitudes for w in walsh_orders]
    if threads > 1:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(_sweep_point, jobs))
    return [_sweep_point(job) for job in jobs]


def error_budget(channels: Sequence[ErrorChannel] | None = None, walsh_order: int = 3,
                 nbar0: float | None = None, settings: SolverSettings = DEFAULT_SETTINGS,
                 t_gate: float = DEFAULT_T_GATE, combined: bool = True,
                 check_truncation: bool = False, fock_cutoff: int | None = None) -> list[dict]:
    """One row per channel evaluated alone, plus an optional all-channels-on row."""
    if channels is None:
        channels = table_one_channels()
    if nbar0 is None:
        nbar0 = TrapConfig().nbar_axial
    schedule = calibrated_schedule(walsh_order, t_gate, settings)
    spec = ops.HilbertSpec(fock_cutoff) if fock_cutoff else None
    rows = []
    for ch in channels:
        res = run_gate(schedule, [ch], nbar0, settings, spec, check_truncation=check_truncation)
        rows.append({"channel": ch.kind, "magnitude": ch.magnitude, "infidelity": res.infidelity,
                     "trace_drift": res.trace_drift, "truncation_delta": res.truncation_delta,
                     "min_eigenvalue": res.min_eigenvalue})
    if combined:
        res = run_gate(schedule, channels, nbar0, settings, spec, check_truncation=check_truncation)
        rows.append({"channel": "combined (all channels)", "magnitude": None,
                     "infidelity": res.infidelity, "trace_drift": res.trace_drift,
                     "truncation_delta": res.truncation_delta,
                     "min_eigenvalue": res.min_eigenvalue})
    return rows
