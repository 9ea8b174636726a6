import math

import numpy as np
import pytest
from hypothesis import given, settings as hsettings, strategies as st
from scipy.linalg import expm

from trapped_electrons import operators as ops
from trapped_electrons.lindblad import (SolverError, SolverSettings, TimeDependentHamiltonian,
                                        apply_superoperator, evolve, evolve_block_diagonal,
                                        lindblad_term, liouvillian, propagator_oracle,
                                        trace_distance)

FINE = SolverSettings(max_step=5e-3)


def random_hermitian(d, rng, scale=1.0):
    g = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    return scale * (g + g.conj().T) / (2 * math.sqrt(d))


def random_density(d, rng):
    g = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    rho = g @ g.conj().T
    return rho / np.trace(rho)


def random_instance(seed, with_lindblads):
    rng = np.random.default_rng(seed)
    d = int(rng.integers(2, 13))
    h = random_hermitian(d, rng)
    ls = []
    if with_lindblads:
        for _ in range(int(rng.integers(1, 4))):
            g = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
            ls.append(0.4 * g / math.sqrt(d))
    return h, ls, random_density(d, rng), float(rng.uniform(0.5, 2.0))


def naive_rhs(rho, h, ls):
    out = -1j * (h @ rho - rho @ h)
    for l in ls:
        ld = l.conj().T
        out += l @ rho @ ld - 0.5 * (ld @ l @ rho + rho @ ld @ l)
    return out


class TestLiouvillian:
    def test_matches_literal_rhs(self):
        rng = np.random.default_rng(0)
        h = random_hermitian(4, rng)
        ls = [rng.normal(size=(4, 4)) + 0j for _ in range(2)]
        rho = random_density(4, rng)
        got = (liouvillian(h, ls) @ rho.ravel()).reshape(4, 4)
        np.testing.assert_allclose(got, naive_rhs(rho, h, ls), atol=1e-12)

    def test_rate_folding(self):
        op = np.diag([1.0, -1.0]).astype(complex)
        np.testing.assert_allclose(lindblad_term(op, 4.0), 2.0 * op)
        with pytest.raises(ValueError):
            lindblad_term(op, -1.0)


class TestClosedForms:
    def test_identity_evolution(self):
        rho = random_density(5, np.random.default_rng(2))
        out = evolve(rho, None, [], (0.0, 1.0))
        np.testing.assert_allclose(out, rho, atol=1e-15)

    def test_unitary_limit(self):
        rng = np.random.default_rng(3)
        h = random_hermitian(6, rng, 3.0)
        rho = random_density(6, rng)
        u = expm(-1j * h * 1.3)
        np.testing.assert_allclose(propagator_oracle(h, [], (0, 1.3)) @ rho.ravel(),
                                   (u @ rho @ u.conj().T).ravel(), atol=1e-9)
        fine = SolverSettings(max_step=5e-4)
        assert trace_distance(evolve(rho, h, [], (0, 1.3), fine), u @ rho @ u.conj().T) < 1e-9

    def test_pure_dephasing(self):
        gamma, t = 1e5, 10e-6
        sz = np.diag([1.0, -1.0]).astype(complex)
        rho = np.full((2, 2), 0.5, dtype=complex)
        out = evolve(rho, None, [math.sqrt(gamma / 2) * sz], (0.0, t))
        assert abs(out[0, 1].real / 0.5 - math.exp(-1.0)) / math.exp(-1.0) < 1e-4

    def test_thermalization(self):
        n, gamma, nth, t = 25, 2e4, 0.5, 60e-6
        spec = ops.HilbertSpec(n, spin_count=0)
        a = ops.lowering_operator(spec)
        ls = [lindblad_term(a, gamma * (nth + 1)), lindblad_term(a.conj().T, gamma * nth)]
        rho = np.zeros((n, n), dtype=complex)
        rho[3, 3] = 1.0
        out = evolve(rho, None, ls, (0.0, t), SolverSettings(steps_per_period=2000))
        mean = np.trace(ops.number_operator(spec) @ out).real
        exact = nth + (3 - nth) * math.exp(-gamma * t)
        assert abs(mean - exact) / exact < 1e-4

    def test_local_evolution_of_product(self):
        rng = np.random.default_rng(4)
        ha = random_hermitian(3, rng, 2.0)
        ra, rb = random_density(3, rng), random_density(2, rng)
        out = evolve(np.kron(ra, rb), np.kron(ha, np.eye(2)), [], (0, 1.0), FINE)
        u = expm(-1j * ha)
        reduced = np.einsum("iaja->ij", out.reshape(3, 2, 3, 2))
        np.testing.assert_allclose(reduced, u @ ra @ u.conj().T, atol=1e-10)


class TestOracleEquivalence:
    @pytest.mark.parametrize("seed", range(10))
    @pytest.mark.parametrize("with_l", [False, True])
    def test_random_constant(self, seed, with_l):
        h, ls, rho, t = random_instance(seed, with_l)
        sup = propagator_oracle(h, ls, (0.0, t))
        ref = apply_superoperator(sup, rho)
        for s in (FINE, SolverSettings(method="rk45", rtol=1e-11, atol=1e-13)):
            assert trace_distance(evolve(rho, h, ls, (0.0, t), s), ref) < 1e-7

    def test_slow_sinusoid(self):
        rng = np.random.default_rng(7)
        h0, h1 = random_hermitian(4, rng, 2e3), random_hermitian(4, rng, 3e3)
        w = 2 * math.pi * 1e3
        h = TimeDependentHamiltonian(((None, h0), (lambda t: math.sin(w * t), h1)),
                                     period=2 * math.pi / w)
        ls = [lindblad_term(random_hermitian(4, rng), 50.0)]
        rho = random_density(4, rng)
        span = (0.0, 1e-3)
        ref = apply_superoperator(propagator_oracle(h, ls, span, n_slices=10_000), rho)
        assert trace_distance(evolve(rho, h, ls, span, SolverSettings(steps_per_period=4000)),
                              ref) < 1e-6

    def test_breakpoint_sign_flip(self):
        rng = np.random.default_rng(8)
        hx = random_hermitian(3, rng, 5.0)
        sign = lambda t: 1.0 if t < 0.4 else -1.0
        h = TimeDependentHamiltonian(((sign, hx),), breakpoints=(0.4,))
        rho = random_density(3, rng)
        ref = apply_superoperator(propagator_oracle(h, [], (0, 1.0), n_slices=4), rho)
        assert trace_distance(evolve(rho, h, [], (0, 1.0), SolverSettings(max_step=5e-4)), ref) < 1e-9

    def test_oracle_size_limit(self):
        with pytest.raises(ValueError):
            propagator_oracle(np.eye(41), [], (0, 1))


class TestBlockDiagonal:
    def test_matches_dense(self):
        spec = ops.HilbertSpec(6)
        a = ops.lowering_operator(spec)
        force = ops.spin_sum_z(spec)
        w = 2 * math.pi
        h = TimeDependentHamiltonian(((lambda t: 0.3 * np.exp(-1j * w * t), force @ a),
                                      (lambda t: 0.3 * np.exp(1j * w * t), force @ a.conj().T)),
                                     period=1.0)
        ls = [lindblad_term(a, 0.05), lindblad_term(ops.pauli_z(spec, 0), 0.1),
              lindblad_term(a.conj().T @ a, 0.02)]
        rho = random_density(spec.dim, np.random.default_rng(9))
        dense = evolve(rho, h, ls, (0, 1.0))
        block, drift = evolve_block_diagonal(rho, h, ls, (0, 1.0), 4)
        assert np.max(np.abs(dense - block)) < 1e-12
        assert drift < 1e-12

    def test_banded_matches_dense_products(self):
        from trapped_electrons.lindblad import BlockProblem, evolve_blocks

        rng = np.random.default_rng(11)
        n, nb = 24, 3

        def banded(offsets, scale):
            m = np.zeros((nb, n, n), dtype=complex)
            for o in offsets:
                for b in range(nb):
                    d = scale * (rng.normal(size=n - abs(o)) + 1j * rng.normal(size=n - abs(o)))
                    m[b] += np.diag(d, o)
            return m

        hl, hr = banded((-1, 0, 1), 1.0), banded((-1, 0, 1), 1.0)
        hl, hr = hl + np.conj(np.swapaxes(hl, 1, 2)), hr + np.conj(np.swapaxes(hr, 1, 2))
        hl2, hr2 = banded((-2, 2), 0.5), banded((-2, 2), 0.5)
        hl2, hr2 = hl2 + np.conj(np.swapaxes(hl2, 1, 2)), hr2 + np.conj(np.swapaxes(hr2, 1, 2))
        jl, jr = banded((1,), 0.2), banded((1, 3), 0.2)
        x0 = rng.normal(size=(nb, n, n)) + 1j * rng.normal(size=(nb, n, n))
        kw = dict(coefs=[None, lambda t: math.cos(3 * t)], h_left=[hl, hl2], h_right=[hr, hr2],
                  jumps=[(jl, jr)], diag=())
        fast, slow = BlockProblem(banded=True, **kw), BlockProblem(banded=False, **kw)
        np.testing.assert_allclose(fast.rhs(0.3, x0), slow.rhs(0.3, x0), atol=1e-12)
        a, _ = evolve_blocks(fast, x0, (0, 0.5))
        b, _ = evolve_blocks(slow, x0, (0, 0.5))
        assert np.max(np.abs(a - b)) < 1e-12

    def test_auto_selects_banded_for_mode_operators(self):
        from trapped_electrons.lindblad import BlockProblem

        a = ops.lowering_operator(ops.HilbertSpec(40, spin_count=0))[None]
        h = a + np.conj(np.swapaxes(a, 1, 2))
        assert BlockProblem(coefs=[None], h_left=[h], h_right=[h], jumps=[(a, a)]).banded
        dense = random_hermitian(40, np.random.default_rng(0))[None]
        assert not BlockProblem(coefs=[None], h_left=[dense], h_right=[dense]).banded

    def test_rejects_off_diagonal_operator(self):
        spec = ops.HilbertSpec(3)
        h = TimeDependentHamiltonian.constant(ops.pauli_x(spec, 0))
        with pytest.raises(ValueError):
            evolve_block_diagonal(np.eye(12) / 12, h, [], (0, 1), 4)


class TestGuards:
    def test_non_hermitian_hamiltonian(self):
        with pytest.raises(ValueError):
            evolve(np.eye(2) / 2, np.array([[0, 1], [0, 0]], dtype=complex), [], (0, 1))

    def test_trace_gate(self):
        # a non-trace-preserving "jump" via a deliberately inconsistent block problem
        from trapped_electrons.lindblad import BlockProblem, evolve_blocks

        l = np.array([[[0, 1], [0, 0]]], dtype=complex)
        z = np.zeros((1, 2, 2), dtype=complex)
        prob = BlockProblem(coefs=[None], h_left=[z], h_right=[z], jumps=[(l, 2 * l)], diag=(0,))
        rho = np.array([[[0.0, 0], [0, 1.0]]], dtype=complex)
        with pytest.raises(SolverError):
            evolve_blocks(prob, rho, (0, 1.0))

    def test_bad_span(self):
        with pytest.raises(ValueError):
            evolve(np.eye(2) / 2, None, [], (1.0, 0.0))

    @pytest.mark.parametrize("kw", [dict(method="euler"), dict(rtol=0), dict(steps_per_period=0)])
    def test_settings_validation(self, kw):
        with pytest.raises(ValueError):
            SolverSettings(**kw)


@given(st.integers(0, 10_000), st.floats(0.1, 3.0))
@hsettings(max_examples=15, deadline=None)
def test_trace_and_positivity_preserved(seed, t):
    h, ls, rho, _ = random_instance(seed, True)
    out = evolve(rho, h, ls, (0.0, t), SolverSettings(max_step=1e-2))
    assert abs(np.trace(out) - 1) < 1e-8
    assert np.linalg.eigvalsh(out).min() >= -1e-7
    assert np.max(np.abs(out - out.conj().T)) < 1e-12
