"""Lindblad master-equation integration with piecewise time-dependent Hamiltonians.

Units follow the hbar = 1 convention: Hamiltonians are angular frequencies
(rad/s), Lindblad operators carry ``sqrt(rate)`` with rates in 1/s.

The integrator core works on a stack of "sandwich" blocks ``X_b`` obeying

    dX/dt = -i (H_L X - X H_R) + sum_n (L_L X L_R^dag - 1/2 L_L^dag L_L X - 1/2 X L_R^dag L_R)

which is the ordinary master equation when ``H_L = H_R`` and ``L_L = L_R``
(the dense case, one block). Operators diagonal in some factor (here the
spin z-basis) split the density matrix into independent blocks of that
form, which is how the gate simulation keeps the cost at ``N^3`` per block.
When every operator is banded (as mode operators in a Fock basis are) the
products are taken diagonal by diagonal instead, at ``N^2`` per band.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numba
import numpy as np
from scipy.integrate import solve_ivp
from scipy.linalg import expm

__all__ = [
    "SolverError",
    "SolverSettings",
    "TimeDependentHamiltonian",
    "BlockProblem",
    "lindblad_term",
    "evolve",
    "evolve_blocks",
    "evolve_block_diagonal",
    "liouvillian",
    "propagator_oracle",
    "apply_superoperator",
    "trace_distance",
]

Coefficient = Callable[[float], complex]


class SolverError(RuntimeError):
    """Integration failed or violated a conservation gate."""


@dataclass(frozen=True)
class SolverSettings:
    """Integrator choice and tolerances.

    ``rk4`` takes ``steps_per_period`` equal steps per reference period of the
    Hamiltonian (``max_step`` caps the step if given). ``rk45`` hands each
    smooth segment to scipy's Dormand-Prince integrator with ``rtol``/``atol``.
    """

    method: str = "rk4"
    rtol: float = 1e-10
    atol: float = 1e-12
    max_step: float | None = None
    steps_per_period: int = 200
    trace_tol: float = 1e-8

    def __post_init__(self):
        if self.method not in ("rk4", "rk45"):
            raise ValueError(f"unknown method {self.method!r}")
        if self.rtol <= 0 or self.atol <= 0:
            raise ValueError("tolerances must be positive")
        if self.steps_per_period < 1:
            raise ValueError("steps_per_period must be >= 1")
        if self.max_step is not None and self.max_step <= 0:
            raise ValueError("max_step must be positive")


@dataclass(frozen=True)
class TimeDependentHamiltonian:
    """``H(t) = sum_k c_k(t) H_k``; ``None`` as coefficient means constant 1.

    ``breakpoints`` are times where some coefficient is discontinuous; the
    integrators never step across them. ``period`` is the fastest oscillation
    period and sets the fixed RK4 step.
    """

    terms: tuple[tuple[Coefficient | None, np.ndarray], ...]
    breakpoints: tuple[float, ...] = ()
    period: float | None = None

    @classmethod
    def constant(cls, h: np.ndarray, period: float | None = None) -> "TimeDependentHamiltonian":
        return cls(((None, np.asarray(h, dtype=complex)),), period=period)

    @property
    def dim(self) -> int:
        return self.terms[0][1].shape[0]

    def coefficients(self, t: float) -> list[complex]:
        return [1.0 if c is None else c(t) for c, _ in self.terms]

    def __call__(self, t: float) -> np.ndarray:
        out = np.zeros_like(self.terms[0][1], dtype=complex)
        for coef, (_, mat) in zip(self.coefficients(t), self.terms):
            out += coef * mat
        return out

    def __add__(self, other: "TimeDependentHamiltonian") -> "TimeDependentHamiltonian":
        period = min((p for p in (self.period, other.period) if p is not None), default=None)
        return TimeDependentHamiltonian(
            self.terms + other.terms,
            tuple(sorted(set(self.breakpoints) | set(other.breakpoints))),
            period,
        )


def lindblad_term(op: np.ndarray, rate: float) -> np.ndarray:
    """Fold a rate into a jump operator: ``L = sqrt(rate) * op``."""
    if rate < 0:
        raise ValueError("rate must be non-negative")
    return math.sqrt(rate) * np.asarray(op, dtype=complex)


def _offsets(mats: Sequence[np.ndarray]) -> np.ndarray:
    """Union of the non-zero diagonals of block stacks ``(B, n, n)``."""
    n = mats[0].shape[-1]
    offs = set()
    for m in mats:
        rows, cols = np.nonzero(np.any(m != 0, axis=0))
        offs.update((cols - rows).tolist())
    return np.array(sorted(offs) or [0], dtype=np.int64)


def _to_dia(m: np.ndarray, offsets: np.ndarray) -> np.ndarray:
    """``D[b, k, i] = M[b, i, i + offsets[k]]`` (zero outside the matrix)."""
    b, n, _ = m.shape
    out = np.zeros((b, len(offsets), n), dtype=complex)
    for k, o in enumerate(offsets):
        d = np.diagonal(m, offset=int(o), axis1=1, axis2=2)
        out[:, k, max(0, -o):max(0, -o) + d.shape[-1]] = d
    return out


@numba.njit(cache=True)
def _dia_left(offsets, diags, x, out):
    # out += M @ x
    nb, n, m = x.shape
    for b in range(nb):
        for k in range(offsets.size):
            o = offsets[k]
            for i in range(max(0, -o), min(n, n - o)):
                d = diags[b, k, i]
                if d != 0:
                    for j in range(m):
                        out[b, i, j] += d * x[b, i + o, j]


@numba.njit(cache=True)
def _dia_right(offsets, diags, x, out):
    # out += x @ M, using M[r, r + o] = diags[k, r]
    nb, n, m = x.shape
    for b in range(nb):
        for i in range(n):
            for k in range(offsets.size):
                o = offsets[k]
                for r in range(max(0, -o), min(m, m - o)):
                    out[b, i, r + o] += x[b, i, r] * diags[b, k, r]


@dataclass
class BlockProblem:
    """Stack of ``B`` sandwich blocks sharing one time grid.

    ``h_left``/``h_right`` hold per-term arrays of shape ``(B, n, n)`` paired
    with the coefficients in ``coefs``. ``jumps`` holds ``(L_left, L_right)``
    pairs of the same shape. ``diag`` lists the blocks that are themselves
    density-matrix diagonal blocks (Hermitian, contributing to the trace with
    multiplicity ``trace_weights``).
    """

    coefs: list[Coefficient | None]
    h_left: list[np.ndarray]
    h_right: list[np.ndarray]
    jumps: list[tuple[np.ndarray, np.ndarray]] = field(default_factory=list)
    diag: Sequence[int] = (0,)
    trace_weights: Sequence[float] | None = None
    breakpoints: tuple[float, ...] = ()
    period: float | None = None
    hermitian_pair: bool = False
    banded: bool | None = None

    def __post_init__(self):
        shape = self.h_left[0].shape
        decay_l = np.zeros(shape, dtype=complex)
        decay_r = np.zeros(shape, dtype=complex)
        for ll, lr in self.jumps:
            decay_l += np.conj(np.swapaxes(ll, -1, -2)) @ ll
            decay_r += np.conj(np.swapaxes(lr, -1, -2)) @ lr
        self._decay_l = -0.5 * decay_l
        self._decay_r = -0.5 * decay_r
        self._jumps_r_dag = [np.conj(np.swapaxes(lr, -1, -2)) for _, lr in self.jumps]
        # jumps proportional to the identity in every block reduce to a scalar sandwich
        self._scalar_jumps = [_scalar_blocks(ll, lr) for ll, lr in self.jumps]
        self._const = [k for k, c in enumerate(self.coefs) if c is None]
        self._timed = [k for k, c in enumerate(self.coefs) if c is not None]
        self._window = (-math.inf, math.inf)
        self._static_l = self._decay_l.copy()
        self._static_r = self._decay_r.copy()
        for k in self._const:
            self._static_l += -1j * self.h_left[k]
            self._static_r += 1j * self.h_right[k]
        self._setup_bands()

    def _setup_bands(self) -> None:
        n = self.h_left[0].shape[-1]
        gen = [self._static_l, self._static_r] + [self.h_left[k] for k in self._timed] + \
            [self.h_right[k] for k in self._timed]
        offs = _offsets(gen)
        jump_offs = [(_offsets([ll]), _offsets([lr_dag]))
                     for (ll, _), lr_dag in zip(self.jumps, self._jumps_r_dag)]
        widest = max([len(offs)] + [max(len(a), len(b)) for a, b in jump_offs])
        if self.banded is None:
            self.banded = n >= 16 and 4 * widest <= n
        if not self.banded:
            return
        self._offs = offs
        self._dia_static_l = _to_dia(self._static_l, offs)
        self._dia_static_r = _to_dia(self._static_r, offs)
        self._dia_h_left = {k: _to_dia(self.h_left[k], offs) for k in self._timed}
        self._dia_h_right = {k: _to_dia(self.h_right[k], offs) for k in self._timed}
        self._dia_jumps = [(a, _to_dia(ll, a), b, _to_dia(lr_dag, b))
                           for (a, b), (ll, _), lr_dag in zip(jump_offs, self.jumps,
                                                             self._jumps_r_dag)]

    def generators(self, t: float) -> tuple[np.ndarray, np.ndarray]:
        """``K_L = -i H_L - 1/2 sum L^dag L`` and ``K_R = i H_R - 1/2 sum L^dag L``."""
        kl = self._static_l.copy()
        kr = self._static_r.copy()
        for k in self._timed:
            c = self.coefs[k](t)
            kl += (-1j * c) * self.h_left[k]
            kr += (1j * c) * self.h_right[k]
        return kl, kr

    def _rhs_banded(self, t: float, x: np.ndarray) -> np.ndarray:
        kl = self._dia_static_l.copy()
        kr = self._dia_static_r.copy()
        for k in self._timed:
            c = self.coefs[k](t)
            kl += (-1j * c) * self._dia_h_left[k]
            kr += (1j * c) * self._dia_h_right[k]
        out = np.zeros_like(x)
        _dia_left(self._offs, kl, x, out)
        if self.hermitian_pair:
            out += np.conj(np.swapaxes(out, -1, -2))
        else:
            _dia_right(self._offs, kr, x, out)
        tmp = np.empty_like(x)
        for (off_l, dl, off_r, dr), scalar in zip(self._dia_jumps, self._scalar_jumps):
            if scalar is not None:
                out += scalar[:, None, None] * x
            else:
                tmp[:] = 0
                _dia_left(off_l, dl, x, tmp)
                _dia_right(off_r, dr, tmp, out)
        return out

    def rhs(self, t: float, x: np.ndarray) -> np.ndarray:
        # coefficients are sampled inside the current smooth segment only
        lo, hi = self._window
        t = min(max(t, lo), hi)
        if self.banded:
            return self._rhs_banded(t, x)
        kl, kr = self.generators(t)
        lx = kl @ x
        if self.hermitian_pair:
            out = lx + np.conj(np.swapaxes(lx, -1, -2))
        else:
            out = lx + x @ kr
        for (ll, _), lr_dag, scalar in zip(self.jumps, self._jumps_r_dag, self._scalar_jumps):
            if scalar is not None:
                out += scalar[:, None, None] * x
            else:
                out += ll @ x @ lr_dag
        return out

    def trace(self, x: np.ndarray) -> complex:
        weights = self.trace_weights or [1] * len(self.diag)
        return sum(w * np.trace(x[b]) for w, b in zip(weights, self.diag))

    def symmetrize(self, x: np.ndarray) -> None:
        for b in self.diag:
            x[b] = 0.5 * (x[b] + x[b].conj().T)

    def segments(self, t0: float, t1: float) -> list[tuple[float, float]]:
        cuts = [t0] + [b for b in sorted(self.breakpoints) if t0 < b < t1] + [t1]
        return list(zip(cuts[:-1], cuts[1:]))


def _scalar_blocks(ll: np.ndarray, lr: np.ndarray) -> np.ndarray | None:
    n = ll.shape[-1]
    cl = ll[:, 0, 0]
    cr = lr[:, 0, 0]
    eye = np.eye(n)
    if np.array_equal(ll, cl[:, None, None] * eye) and np.array_equal(lr, cr[:, None, None] * eye):
        return cl * np.conj(cr)
    return None


def _fixed_step(settings: SolverSettings, period: float | None, length: float) -> float:
    h = math.inf
    if period is not None:
        h = period / settings.steps_per_period
    if settings.max_step is not None:
        h = min(h, settings.max_step)
    if not math.isfinite(h):
        h = length / settings.steps_per_period
    return h


def _rk4_segment(problem: BlockProblem, x: np.ndarray, a: float, b: float, h: float) -> np.ndarray:
    n = max(1, math.ceil((b - a) / h * (1 - 1e-12)))
    dt = (b - a) / n
    for k in range(n):
        t = a + k * dt
        k1 = problem.rhs(t, x)
        k2 = problem.rhs(t + 0.5 * dt, x + (0.5 * dt) * k1)
        k3 = problem.rhs(t + 0.5 * dt, x + (0.5 * dt) * k2)
        k4 = problem.rhs(t + dt, x + dt * k3)
        x = x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        problem.symmetrize(x)
    return x


def _rk45_segment(problem: BlockProblem, x: np.ndarray, a: float, b: float,
                  settings: SolverSettings) -> np.ndarray:
    shape = x.shape

    def f(t, y):
        return problem.rhs(t, y.reshape(shape)).ravel()

    kwargs = {}
    if settings.max_step is not None:
        kwargs["max_step"] = settings.max_step
    sol = solve_ivp(f, (a, b), x.ravel(), method="RK45", rtol=settings.rtol,
                    atol=settings.atol, **kwargs)
    if sol.status != 0:
        raise SolverError(f"adaptive integration failed on [{a:.3e}, {b:.3e}]: {sol.message}")
    x = sol.y[:, -1].reshape(shape)
    problem.symmetrize(x)
    return x


def evolve_blocks(problem: BlockProblem, x0: np.ndarray, t_span: tuple[float, float],
                  settings: SolverSettings = SolverSettings()) -> tuple[np.ndarray, float]:
    """Integrate a :class:`BlockProblem`; returns final blocks and trace drift."""
    t0, t1 = map(float, t_span)
    if not t1 > t0:
        raise ValueError("t_span must satisfy t1 > t0")
    x = np.array(x0, dtype=complex, copy=True)
    tr0 = problem.trace(x)
    h = _fixed_step(settings, problem.period, t1 - t0)
    for a, b in problem.segments(t0, t1):
        problem._window = (a, np.nextafter(b, a))
        if settings.method == "rk4":
            x = _rk4_segment(problem, x, a, b, h)
        else:
            x = _rk45_segment(problem, x, a, b, settings)
        if not np.all(np.isfinite(x)):
            raise SolverError("non-finite state encountered; step too large?")
    drift = abs(problem.trace(x) - tr0)
    if drift > settings.trace_tol:
        raise SolverError(f"trace drift {drift:.2e} exceeds {settings.trace_tol:.0e}")
    return x, float(drift)


def _check_hermitian(h: TimeDependentHamiltonian, t0: float, t1: float, tol: float = 1e-10) -> None:
    cuts = [t0] + [b for b in h.breakpoints if t0 < b < t1] + [t1]
    samples = {t0, t1}
    for a, b in zip(cuts[:-1], cuts[1:]):
        samples.update((a + 1e-3 * (b - a), 0.5 * (a + b), b - 1e-3 * (b - a)))
    for t in sorted(samples):
        m = h(t)
        err = np.max(np.abs(m - m.conj().T))
        scale = max(1.0, np.max(np.abs(m)))
        if err > tol * scale:
            raise ValueError(f"Hamiltonian not Hermitian at t={t:.3e} (residual {err:.2e})")


def evolve(rho0: np.ndarray, hamiltonian: TimeDependentHamiltonian | np.ndarray | None,
           lindblads: Sequence[np.ndarray], t_span: tuple[float, float],
           settings: SolverSettings = SolverSettings()) -> np.ndarray:
    """Evolve a dense density matrix from ``t_span[0]`` to ``t_span[1]``.

    Parameters
    ----------
    rho0 : (d, d) array
        Initial density matrix.
    hamiltonian : TimeDependentHamiltonian, array or None
        Hamiltonian in rad/s; a plain array is treated as constant.
    lindblads : sequence of (d, d) arrays
        Jump operators with rates already folded in.
    t_span : (t0, t1)
        Start and stop times in seconds.
    settings : SolverSettings

    Returns
    -------
    (d, d) ndarray
        ``rho(t1)``. Raises :class:`SolverError` if the trace drifts by more
        than ``settings.trace_tol``.
    """
    rho0 = np.asarray(rho0, dtype=complex)
    d = rho0.shape[0]
    if hamiltonian is None:
        hamiltonian = TimeDependentHamiltonian.constant(np.zeros((d, d), dtype=complex))
    elif not isinstance(hamiltonian, TimeDependentHamiltonian):
        hamiltonian = TimeDependentHamiltonian.constant(hamiltonian)
    if hamiltonian.dim != d:
        raise ValueError("Hamiltonian and state dimensions differ")
    _check_hermitian(hamiltonian, *map(float, t_span))
    mats = [m[None] for _, m in hamiltonian.terms]
    jumps = []
    for op in lindblads:
        op = np.asarray(op, dtype=complex)
        if op.shape != (d, d):
            raise ValueError("Lindblad operator dimension mismatch")
        jumps.append((op[None], op[None]))
    problem = BlockProblem(
        coefs=[c for c, _ in hamiltonian.terms], h_left=mats, h_right=mats, jumps=jumps,
        diag=(0,), breakpoints=hamiltonian.breakpoints, period=hamiltonian.period,
        hermitian_pair=True,
    )
    x, _ = evolve_blocks(problem, rho0[None], t_span, settings)
    return x[0]


def liouvillian(h: np.ndarray, lindblads: Sequence[np.ndarray] = ()) -> np.ndarray:
    """Row-major vectorized generator: ``vec(drho/dt) = L @ vec(rho)``.

    Uses ``vec(A X B) = (A kron B^T) vec(X)`` for row-major flattening.
    """
    h = np.asarray(h, dtype=complex)
    d = h.shape[0]
    eye = np.eye(d, dtype=complex)
    gen = -1j * (np.kron(h, eye) - np.kron(eye, h.T))
    for op in lindblads:
        op = np.asarray(op, dtype=complex)
        ldl = op.conj().T @ op
        gen += np.kron(op, op.conj()) - 0.5 * np.kron(ldl, eye) - 0.5 * np.kron(eye, ldl.T)
    return gen


def propagator_oracle(hamiltonian: TimeDependentHamiltonian | np.ndarray,
                      lindblads: Sequence[np.ndarray], t_span: tuple[float, float],
                      n_slices: int = 1, max_dim: int = 40) -> np.ndarray:
    """Superoperator of the evolution from brute-force matrix exponentials.

    The span is cut at the Hamiltonian breakpoints and into ``n_slices``
    piecewise-constant slices (midpoint sampling); the slice propagators
    ``expm(L dt)`` are composed in time order. Only meant for validation.
    """
    if not isinstance(hamiltonian, TimeDependentHamiltonian):
        hamiltonian = TimeDependentHamiltonian.constant(hamiltonian)
    d = hamiltonian.dim
    if d > max_dim:
        raise ValueError(f"oracle limited to dimension <= {max_dim}, got {d}")
    t0, t1 = map(float, t_span)
    cuts = [t0] + [b for b in sorted(hamiltonian.breakpoints) if t0 < b < t1] + [t1]
    total = t1 - t0
    prop = np.eye(d * d, dtype=complex)
    const = len(hamiltonian.terms) and all(c is None for c, _ in hamiltonian.terms)
    for a, b in zip(cuts[:-1], cuts[1:]):
        m = 1 if const else max(1, round(n_slices * (b - a) / total))
        dt = (b - a) / m
        for k in range(m):
            gen = liouvillian(hamiltonian(a + (k + 0.5) * dt), lindblads)
            prop = expm(gen * dt) @ prop
    return prop


def apply_superoperator(superop: np.ndarray, rho: np.ndarray) -> np.ndarray:
    d = rho.shape[0]
    return (superop @ np.asarray(rho, dtype=complex).ravel()).reshape(d, d)


def trace_distance(rho: np.ndarray, sigma: np.ndarray) -> float:
    """``1/2 ||rho - sigma||_1`` via the eigenvalues of the Hermitian difference."""
    diff = np.asarray(rho) - np.asarray(sigma)
    diff = 0.5 * (diff + diff.conj().T)
    return 0.5 * float(np.abs(np.linalg.eigvalsh(diff)).sum())


def _block_diagonal_parts(op: np.ndarray, n_blocks: int, size: int, tol: float = 0.0) -> np.ndarray:
    blocks = np.asarray(op, dtype=complex).reshape(n_blocks, size, n_blocks, size)
    diag = np.stack([blocks[i, :, i, :] for i in range(n_blocks)])
    off = blocks.copy()
    for i in range(n_blocks):
        off[i, :, i, :] = 0.0
    scale = max(1.0, float(np.max(np.abs(blocks))))
    if np.max(np.abs(off)) > tol * scale:
        raise ValueError("operator is not block diagonal in the leading factor")
    return diag


def evolve_block_diagonal(rho0: np.ndarray, hamiltonian: TimeDependentHamiltonian,
                          lindblads: Sequence[np.ndarray], t_span: tuple[float, float],
                          n_blocks: int, settings: SolverSettings = SolverSettings()
                          ) -> tuple[np.ndarray, float]:
    """Same equation as :func:`evolve` for operators block diagonal in a leading factor.

    When every Hamiltonian term and jump operator is ``sum_i |i><i| (x) M_i``
    for ``n_blocks`` leading basis states, the ``(i, j)`` blocks of ``rho``
    decouple. Only ``i <= j`` blocks are integrated (the rest follow by
    Hermiticity), and blocks with identical operators and initial data are
    integrated once. Returns ``(rho(t1), trace_drift)``.
    """
    rho0 = np.asarray(rho0, dtype=complex)
    d = rho0.shape[0]
    if d % n_blocks:
        raise ValueError("dimension is not a multiple of n_blocks")
    size = d // n_blocks
    _check_hermitian(hamiltonian, *map(float, t_span))
    term_parts = [_block_diagonal_parts(m, n_blocks, size) for _, m in hamiltonian.terms]
    jump_parts = [_block_diagonal_parts(np.asarray(op, dtype=complex), n_blocks, size)
                  for op in lindblads]

    # leading states with identical operator blocks share a class
    cls = list(range(n_blocks))
    for i in range(n_blocks):
        for r in range(i):
            if cls[r] == r and all(np.array_equal(p[i], p[r]) for p in term_parts + jump_parts):
                cls[i] = r
                break

    blocks0 = rho0.reshape(n_blocks, size, n_blocks, size)
    groups: dict = {}
    for i in range(n_blocks):
        for j in range(i, n_blocks):
            init = blocks0[i, :, j, :]
            key = (cls[i], cls[j], init.tobytes())
            groups.setdefault(key, []).append((i, j))
    keys = list(groups)
    left = np.array([k[0] for k in keys])
    right = np.array([k[1] for k in keys])
    diag = [n for n, k in enumerate(keys) if any(i == j for i, j in groups[k])]
    weights = [sum(i == j for i, j in groups[keys[n]]) for n in diag]
    problem = BlockProblem(
        coefs=[c for c, _ in hamiltonian.terms],
        h_left=[p[left] for p in term_parts], h_right=[p[right] for p in term_parts],
        jumps=[(p[left], p[right]) for p in jump_parts],
        diag=diag, trace_weights=weights,
        breakpoints=hamiltonian.breakpoints, period=hamiltonian.period,
    )
    x0 = np.stack([blocks0[groups[k][0][0], :, groups[k][0][1], :] for k in keys])
    x, drift = evolve_blocks(problem, x0, t_span, settings)
    out = np.zeros((n_blocks, size, n_blocks, size), dtype=complex)
    for n, k in enumerate(keys):
        for i, j in groups[k]:
            out[i, :, j, :] = x[n]
            if i != j:
                out[j, :, i, :] = x[n].conj().T
    return out.reshape(d, d), drift
