"""Resolvent, semigroup (uniformization) and capacity against dense oracles."""

import math

import numpy as np
import pytest
import scipy.linalg as sla

from tracechain import (
    DomainError,
    ScaleFunction,
    SpeedMeasure,
    build_partition,
    build_trace_chain,
    capacity,
    dirichlet_energy,
    generator_matrix,
    semigroup_apply,
    solve_shifted,
)
from conftest import dense_generator

LAMBDAS = (0.5, 1.0, 4.0)


@pytest.fixture(scope="module")
def two_state_chain():
    p = build_partition("explicit", points=[0.0, 0.4, 1.0])
    m = SpeedMeasure.piecewise([0.0, 0.4, 1.0], [2.0, 0.5])
    return build_trace_chain(p, ScaleFunction.identity(), m)


class TestSolveShifted:
    def test_conservation(self, flat_chain_16):
        op = generator_matrix(flat_chain_16)
        for lam in LAMBDAS:
            g = solve_shifted(op, lam, np.ones(16))
            assert np.max(np.abs(lam * g - 1.0)) < 1e-12

    def test_two_state_closed_form(self, two_state_chain):
        # Hand-inverted 2x2 system (lam - L) g = f.
        chain = two_state_chain
        op = generator_matrix(chain)
        m1, m2 = chain.masses
        c = chain.conductances[0]
        lam = 1.7
        f = np.array([0.3, -1.1])
        det = lam * (lam + c / m1 + c / m2)
        inv = np.array([[lam + c / m2, c / m1],
                        [c / m2, lam + c / m1]]) / det
        assert np.allclose(solve_shifted(op, lam, f), inv @ f, rtol=1e-13)

    def test_flat_discrete_cosine_eigenmode(self, lebesgue):
        # The flat chain generator acts on the cell-centred cosine modes
        # v_k(i) = cos(k pi (i + 1/2) / n) with eigenvalue
        # -n^2 (1 - cos(k pi / n)): resolvent values are then explicit.
        n = 16
        chain = build_trace_chain(build_partition("uniform", n=n),
                                  ScaleFunction.identity(), lebesgue)
        op = generator_matrix(chain)
        i = np.arange(n)
        for k in (1, 3):
            v = np.cos(k * math.pi * (i + 0.5) / n)
            mu = n * n * (1.0 - math.cos(k * math.pi / n))
            for lam in LAMBDAS:
                g = solve_shifted(op, lam, v)
                assert np.allclose(g, v / (lam + mu), rtol=1e-11)

    def test_dense_eigensolve_oracle(self, flat_chain_16):
        op = generator_matrix(flat_chain_16)
        dense = dense_generator(flat_chain_16)
        w, vecs = np.linalg.eigh(dense)  # masses equal: already symmetric
        rng = np.random.default_rng(5)
        f = rng.normal(size=16)
        for lam in LAMBDAS:
            oracle = vecs @ ((vecs.T @ f) / (lam - w))
            assert np.allclose(solve_shifted(op, lam, f), oracle, rtol=1e-10)

    def test_resolvent_identity(self, flat_chain_16):
        op = generator_matrix(flat_chain_16)
        rng = np.random.default_rng(6)
        f = rng.normal(size=16)
        scale = np.max(np.abs(f))
        for lam in LAMBDAS:
            for mu in LAMBDAS:
                g = (solve_shifted(op, lam, f) - solve_shifted(op, mu, f)
                     + (lam - mu) * solve_shifted(op, lam, solve_shifted(op, mu, f)))
                assert np.max(np.abs(g)) < 1e-10 * scale

    def test_markov_contraction(self, flat_chain_16):
        op = generator_matrix(flat_chain_16)
        rng = np.random.default_rng(7)
        f = rng.normal(size=16)
        for lam in LAMBDAS:
            assert np.max(np.abs(lam * solve_shifted(op, lam, f))) <= np.max(np.abs(f)) + 1e-12

    def test_symmetry_and_duality(self, fat_scale_8, atom_speed):
        chain = build_trace_chain(build_partition("uniform", n=11),
                                  fat_scale_8, atom_speed)
        op = generator_matrix(chain)
        rng = np.random.default_rng(8)
        f, g = rng.normal(size=11), rng.normal(size=11)
        m = chain.masses
        lam = 1.0
        gf = solve_shifted(op, lam, f)
        gg = solve_shifted(op, lam, g)
        lhs = float(np.sum(m * gf * g))
        rhs = float(np.sum(m * f * gg))
        assert lhs == pytest.approx(rhs, rel=1e-11)
        # E_lam(G_lam f, g) = <f, g>_m
        form = dirichlet_energy(chain, gf, g) + lam * float(np.sum(m * gf * g))
        assert form == pytest.approx(float(np.sum(m * f * g)), rel=1e-10)

    def test_shift_validation(self, flat_chain_4):
        op = generator_matrix(flat_chain_4)
        with pytest.raises(DomainError):
            solve_shifted(op, 0.0, np.ones(4))
        with pytest.raises(DomainError):
            solve_shifted(op, -1.0, np.ones(4))


class TestSemigroup:
    def test_identity_at_zero(self, flat_chain_16):
        op = generator_matrix(flat_chain_16)
        f = np.sin(np.arange(16.0))
        assert np.array_equal(semigroup_apply(op, 0.0, f), f)

    def test_conserves_constants(self, flat_chain_16):
        op = generator_matrix(flat_chain_16)
        tol = 1e-10
        out = semigroup_apply(op, 0.7, np.ones(16), tol=tol)
        assert np.max(np.abs(out - 1.0)) <= tol

    def test_positivity(self, flat_chain_16):
        op = generator_matrix(flat_chain_16)
        f = np.zeros(16)
        f[3] = 1.0
        assert np.min(semigroup_apply(op, 0.2, f)) >= 0.0

    def test_against_dense_expm(self, lebesgue):
        chain = build_trace_chain(build_partition("uniform", n=8),
                                  ScaleFunction.identity(), lebesgue)
        op = generator_matrix(chain)
        dense = dense_generator(chain)
        rng = np.random.default_rng(9)
        f = rng.normal(size=8)
        tol = 1e-10
        for t in (0.05, 0.1, 0.8):
            oracle = sla.expm(t * dense) @ f
            got = semigroup_apply(op, t, f, tol=tol)
            assert np.max(np.abs(got - oracle)) < 10 * tol * max(1.0, np.max(np.abs(f)))

    def test_semigroup_property(self, flat_chain_16):
        op = generator_matrix(flat_chain_16)
        rng = np.random.default_rng(10)
        f = rng.normal(size=16)
        tol = 1e-11
        once = semigroup_apply(op, 0.3, f, tol=tol)
        twice = semigroup_apply(op, 0.1, semigroup_apply(op, 0.2, f, tol=tol), tol=tol)
        assert np.max(np.abs(once - twice)) < 10 * tol * max(1.0, np.max(np.abs(f)))

    def test_sup_contraction(self, flat_chain_16):
        op = generator_matrix(flat_chain_16)
        rng = np.random.default_rng(11)
        f = rng.normal(size=16)
        out = semigroup_apply(op, 0.4, f)
        assert np.max(np.abs(out)) <= np.max(np.abs(f)) + 1e-12

    def test_validation(self, flat_chain_4):
        op = generator_matrix(flat_chain_4)
        with pytest.raises(DomainError):
            semigroup_apply(op, -0.1, np.ones(4))
        with pytest.raises(DomainError):
            semigroup_apply(op, 0.1, np.ones(4), tol=0.0)


class TestCapacity:
    def test_full_set(self, flat_chain_16):
        cap, p = capacity(flat_chain_16, np.arange(16))
        assert np.allclose(p, 1.0, atol=1e-14)
        assert cap == pytest.approx(flat_chain_16.total_mass, rel=1e-13)

    def test_two_state_scalar_solve(self, two_state_chain):
        chain = two_state_chain
        lam2 = chain.rates[1]
        cap, p = capacity(chain, [0])
        assert p[0] == 1.0
        assert p[1] == pytest.approx(lam2 / (1.0 + lam2), rel=1e-13)
        c = chain.conductances[0]
        m = chain.masses
        expected = c * (1.0 - p[1]) ** 2 + m[0] + m[1] * p[1] ** 2
        assert cap == pytest.approx(expected, rel=1e-13)

    def test_equilibrium_potential_range(self, flat_chain_16):
        cap, p = capacity(flat_chain_16, [7, 8])
        assert np.all(p >= -1e-14) and np.all(p <= 1.0 + 1e-14)
        assert cap > 0.0

    def test_resolvent_characterisation(self, flat_chain_16):
        # Off the target set, (1 - L) p must vanish.
        op = generator_matrix(flat_chain_16)
        _, p = capacity(flat_chain_16, [3])
        residual = p - op.matvec(p)
        mask = np.ones(16, dtype=bool)
        mask[3] = False
        assert np.max(np.abs(residual[mask])) < 1e-10

    def test_monotone_in_target(self, flat_chain_16):
        cap_small, _ = capacity(flat_chain_16, [8])
        cap_big, _ = capacity(flat_chain_16, [7, 8, 9])
        assert cap_small <= cap_big + 1e-13

    def test_empty_target_flagged(self, flat_chain_16):
        with pytest.raises(DomainError):
            capacity(flat_chain_16, [])
