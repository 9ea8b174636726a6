"""Operator algebra on the spin (x) spin (x) Fock space of a two-electron crystal.

Basis ordering is fixed as ``spin0 (x) spin1 (x) Fock`` with each spin
ordered ``(up, down)``, so composite index ``k = 2*N*s0 + N*s1 + n``.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import reduce

import numpy as np
from scipy.linalg import expm

__all__ = [
    "HilbertSpec",
    "TruncationError",
    "lowering_operator",
    "raising_operator",
    "number_operator",
    "pauli_z",
    "pauli_x",
    "spin_sum_z",
    "embed_motion",
    "embed_spin",
    "basis_ket",
    "plus_state",
    "thermal_populations",
    "thermal_state",
    "coherent_populations",
    "partial_trace_motion",
    "bell_fidelity",
    "displacement_operator",
    "check_density_matrix",
    "DEFAULT_TAIL_TOL",
]

DEFAULT_TAIL_TOL = 1e-8

_SZ = np.array([[1.0, 0.0], [0.0, -1.0]], dtype=complex)
_SX = np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex)


class TruncationError(ValueError):
    """Raised when the Fock cutoff is too small for the requested state."""


@dataclass(frozen=True)
class HilbertSpec:
    """Dimensions of the composite space.

    Parameters
    ----------
    fock_cutoff : int
        Number of retained Fock levels ``N`` (>= 2).
    spin_count : int
        Number of spin-1/2 factors in front of the mode.
    """

    fock_cutoff: int = 60
    spin_count: int = 2

    def __post_init__(self):
        if int(self.fock_cutoff) != self.fock_cutoff or self.fock_cutoff < 2:
            raise ValueError(f"fock_cutoff must be an integer >= 2, got {self.fock_cutoff}")
        if self.spin_count < 0:
            raise ValueError("spin_count must be non-negative")

    @property
    def spin_dim(self) -> int:
        return 2**self.spin_count

    @property
    def dim(self) -> int:
        return self.spin_dim * self.fock_cutoff


def _fock_lowering(n: int) -> np.ndarray:
    return np.diag(np.sqrt(np.arange(1, n, dtype=float)), 1).astype(complex)


def embed_motion(spec: HilbertSpec, op: np.ndarray) -> np.ndarray:
    """Place an ``N x N`` motional operator on the composite space."""
    op = np.asarray(op, dtype=complex)
    if op.shape != (spec.fock_cutoff, spec.fock_cutoff):
        raise ValueError(f"motional operator must be {spec.fock_cutoff}x{spec.fock_cutoff}")
    return np.kron(np.eye(spec.spin_dim, dtype=complex), op)


def embed_spin(spec: HilbertSpec, op: np.ndarray, which_spin: int) -> np.ndarray:
    """Place a single-spin ``2 x 2`` operator on spin ``which_spin``."""
    if not 0 <= which_spin < spec.spin_count:
        raise IndexError(f"which_spin={which_spin} out of range for {spec.spin_count} spins")
    factors = [np.eye(2, dtype=complex)] * spec.spin_count
    factors[which_spin] = np.asarray(op, dtype=complex)
    factors.append(np.eye(spec.fock_cutoff, dtype=complex))
    return reduce(np.kron, factors)


def lowering_operator(spec: HilbertSpec) -> np.ndarray:
    """Mode lowering operator ``a`` with ``a[n-1, n] = sqrt(n)``, embedded."""
    return embed_motion(spec, _fock_lowering(spec.fock_cutoff))


def raising_operator(spec: HilbertSpec) -> np.ndarray:
    return lowering_operator(spec).conj().T


def number_operator(spec: HilbertSpec) -> np.ndarray:
    return embed_motion(spec, np.diag(np.arange(spec.fock_cutoff, dtype=complex)))


def pauli_z(spec: HilbertSpec, which_spin: int) -> np.ndarray:
    """sigma_z on one spin, identity on the other spin and on the mode."""
    return embed_spin(spec, _SZ, which_spin)


def pauli_x(spec: HilbertSpec, which_spin: int) -> np.ndarray:
    return embed_spin(spec, _SX, which_spin)


def spin_sum_z(spec: HilbertSpec) -> np.ndarray:
    """``I (x) sz + sz (x) I``, the collective force operator of the gate."""
    return sum(pauli_z(spec, k) for k in range(spec.spin_count))


def basis_ket(spec: HilbertSpec, spins: tuple[int, ...], n: int = 0) -> np.ndarray:
    """Product basis vector; ``spins`` entries are 0 for up and 1 for down."""
    if len(spins) != spec.spin_count:
        raise ValueError("need one label per spin")
    if not 0 <= n < spec.fock_cutoff:
        raise IndexError("Fock index outside cutoff")
    index = 0
    for s in spins:
        index = 2 * index + int(s)
    ket = np.zeros(spec.dim, dtype=complex)
    ket[index * spec.fock_cutoff + n] = 1.0
    return ket


def plus_state() -> np.ndarray:
    """Single-spin ``|+> = (|up> + |down>)/sqrt(2)``."""
    return np.array([1.0, 1.0], dtype=complex) / np.sqrt(2.0)


def thermal_populations(nbar: float, cutoff: int, tail_tol: float = DEFAULT_TAIL_TOL) -> np.ndarray:
    """Bose-Einstein Fock populations renormalized over ``cutoff`` levels.

    The discarded tail weight ``(nbar/(nbar+1))**cutoff`` must stay below
    ``tail_tol``; otherwise :class:`TruncationError` is raised.
    """
    if nbar < 0:
        raise ValueError("nbar must be non-negative")
    if nbar == 0:
        p = np.zeros(cutoff)
        p[0] = 1.0
        return p
    ratio = nbar / (nbar + 1.0)
    tail = ratio**cutoff
    if tail > tail_tol:
        raise TruncationError(
            f"thermal tail weight {tail:.2e} beyond N={cutoff} exceeds {tail_tol:.0e} for nbar={nbar}"
        )
    p = ratio ** np.arange(cutoff)
    return p / p.sum()


def thermal_state(spec: HilbertSpec, nbar: float, tail_tol: float = DEFAULT_TAIL_TOL) -> np.ndarray:
    """Motional thermal state ``sum_n p_n |n><n|`` on the Fock factor only."""
    return np.diag(thermal_populations(nbar, spec.fock_cutoff, tail_tol)).astype(complex)


def coherent_populations(alpha: complex, cutoff: int) -> np.ndarray:
    """Poisson weights ``exp(-|a|^2) |a|^(2n) / n!`` computed by recursion."""
    mean = abs(alpha) ** 2
    p = np.empty(cutoff)
    p[0] = np.exp(-mean)
    for n in range(1, cutoff):
        p[n] = p[n - 1] * mean / n
    return p


def partial_trace_motion(rho: np.ndarray, spec: HilbertSpec) -> np.ndarray:
    """Trace out the Fock factor, returning the ``2**spin_count`` square spin state."""
    rho = np.asarray(rho)
    if rho.shape != (spec.dim, spec.dim):
        raise ValueError(f"expected a {spec.dim}x{spec.dim} matrix, got {rho.shape}")
    s, n = spec.spin_dim, spec.fock_cutoff
    return np.einsum("injn->ij", rho.reshape(s, n, s, n))


def bell_fidelity(rho_spin: np.ndarray, target: np.ndarray) -> float:
    """Overlap ``<target| rho |target>`` of a spin state with a pure target."""
    target = np.asarray(target, dtype=complex)
    norm = np.vdot(target, target).real
    if abs(norm - 1.0) > 1e-12:
        raise ValueError(f"target state is not normalized (norm^2 = {norm})")
    value = np.vdot(target, np.asarray(rho_spin) @ target)
    if abs(value.imag) > 1e-10:
        raise ValueError(f"fidelity has imaginary residue {value.imag:.2e}; rho is not Hermitian")
    return float(min(max(value.real, 0.0), 1.0))


def displacement_operator(
    spec: HilbertSpec, alpha: complex, tail_tol: float = DEFAULT_TAIL_TOL, embed: bool = True
) -> np.ndarray:
    """``D(alpha) = exp(alpha a^dag - alpha* a)`` on the truncated mode.

    The cutoff is accepted only if the coherent state ``D(alpha)|0>`` keeps
    less than ``tail_tol`` of its weight beyond the top Fock level.
    """
    n = spec.fock_cutoff
    tail = 1.0 - coherent_populations(alpha, n).sum()
    if tail > tail_tol:
        raise TruncationError(f"coherent tail {tail:.2e} beyond N={n} for |alpha|={abs(alpha):.3g}")
    a = _fock_lowering(n)
    d = expm(alpha * a.conj().T - np.conj(alpha) * a)
    return embed_motion(spec, d) if embed else d


def check_density_matrix(rho: np.ndarray, herm_tol: float = 1e-10, trace_tol: float = 1e-9,
                         eig_tol: float = 1e-9) -> None:
    """Raise ``ValueError`` unless ``rho`` is Hermitian, unit-trace and positive."""
    rho = np.asarray(rho)
    if rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
        raise ValueError("density matrix must be square")
    herm = np.max(np.abs(rho - rho.conj().T))
    if herm > herm_tol:
        raise ValueError(f"not Hermitian: max |rho - rho^dag| = {herm:.2e}")
    tr = np.trace(rho).real
    if abs(tr - 1.0) > trace_tol:
        raise ValueError(f"trace {tr!r} differs from 1")
    lam = np.linalg.eigvalsh(0.5 * (rho + rho.conj().T)).min()
    if lam < -eig_tol:
        raise ValueError(f"negative eigenvalue {lam:.2e}")
