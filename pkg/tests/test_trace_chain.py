"""Partition and trace-chain construction, discrete form, extensions."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tracechain import (
    DegenerateCellError,
    DomainError,
    SAdaptedFunction,
    ScaleFunction,
    SpeedMeasure,
    ValidationError,
    build_fat_cantor_scale,
    build_partition,
    build_trace_chain,
    continuous_energy,
    dirichlet_energy,
    generator_matrix,
    harmonic_extension,
    hitting_prob_right,
    interpolation_energy,
    scale_eval,
)


class TestBuildPartition:
    def test_uniform(self):
        p = build_partition("uniform", n=4)
        assert np.array_equal(p.points, [0.0, 0.25, 0.5, 0.75, 1.0])
        assert p.n_states == 4

    def test_svc_endpoints_depth1(self):
        p = build_partition("svc_endpoints", depth=1)
        assert np.array_equal(p.points, [0.0, 0.375, 0.625, 1.0])

    def test_explicit(self):
        p = build_partition("explicit", points=[0.0, 0.1, 1.0])
        assert p.mesh == pytest.approx(0.9)

    def test_validation(self):
        with pytest.raises(ValidationError):
            build_partition("explicit", points=[0.0, 0.5, 0.5, 1.0])
        with pytest.raises(ValidationError):
            build_partition("explicit", points=[0.1, 0.5, 1.0])
        with pytest.raises(ValidationError):
            build_partition("uniform", n=1)
        with pytest.raises(ValidationError):
            build_partition("hexagonal")


class TestBuildTraceChain:
    def test_flat_uniform4(self, flat_chain_4):
        chain = flat_chain_4
        assert np.allclose(chain.conductances, [2.0, 2.0, 2.0], atol=1e-15)
        assert np.allclose(chain.masses, 0.25, atol=1e-15)
        assert np.allclose(chain.rates, [8.0, 16.0, 16.0, 8.0], atol=1e-15)

    def test_svc_depth1_conductances(self, lebesgue):
        scale = build_fat_cantor_scale(1)
        p = build_partition("svc_endpoints", depth=1)
        chain = build_trace_chain(p, scale, lebesgue)
        assert np.array_equal(chain.grid, [0.0, 0.375, 0.625])
        # scale gaps 1/8 and 1/4 give conductances 4 and 2 exactly
        assert np.array_equal(chain.conductances, [4.0, 2.0])

    def test_jump_probabilities(self, flat_chain_16):
        chain = flat_chain_16
        c = chain.conductances
        assert chain.jump_right[0] == 1.0
        assert chain.jump_right[-1] == 0.0
        interior = c[1:] / (c[:-1] + c[1:])
        assert np.allclose(chain.jump_right[1:-1], interior, atol=1e-15)

    def test_mass_conservation_with_atoms(self, atom_speed):
        p = build_partition("uniform", n=7)
        chain = build_trace_chain(p, ScaleFunction.identity(), atom_speed)
        assert chain.total_mass == pytest.approx(atom_speed.total_mass, abs=1e-15)

    def test_atom_at_one_lands_in_last_cell(self):
        m = SpeedMeasure.piecewise([0, 1], [1.0], atoms=[(1.0, 0.5)])
        p = build_partition("uniform", n=4)
        chain = build_trace_chain(p, ScaleFunction.identity(), m)
        assert chain.masses[-1] == pytest.approx(0.75, abs=1e-15)

    def test_degenerate_cell_names_cell(self):
        m = SpeedMeasure.piecewise([0.0, 0.5, 0.75, 1.0], [1.0, 0.0, 1.0])
        p = build_partition("explicit", points=[0.0, 0.5, 0.75, 1.0])
        with pytest.raises(DegenerateCellError, match="cell 1"):
            build_trace_chain(p, ScaleFunction.identity(), m)

    def test_single_state_rejected(self, lebesgue):
        p = build_partition("explicit", points=[0.0, 1.0])
        with pytest.raises(ValidationError):
            build_trace_chain(p, ScaleFunction.identity(), lebesgue)


class TestDirichletEnergy:
    def test_constant_zero(self, flat_chain_4):
        assert dirichlet_energy(flat_chain_4, np.full(4, 3.7)) == 0.0

    def test_alternating(self, flat_chain_4):
        assert dirichlet_energy(flat_chain_4, [0.0, 1.0, 0.0, 1.0]) == pytest.approx(6.0)

    def test_scale_restriction_telescopes(self, fat_scale_8, lebesgue):
        p = build_partition("uniform", n=20)
        chain = build_trace_chain(p, fat_scale_8, lebesgue)
        phi = scale_eval(fat_scale_8, chain.grid)
        expected = 0.5 * (phi[-1] - phi[0])
        assert dirichlet_energy(chain, phi) == pytest.approx(expected, rel=1e-13)

    @settings(max_examples=50, deadline=None)
    @given(phi=st.lists(st.floats(min_value=-5, max_value=5), min_size=16,
                        max_size=16))
    def test_matches_pairwise_conductance_form(self, flat_chain_16, phi):
        phi = np.asarray(phi)
        chain = flat_chain_16
        # Half-sum over ordered pairs of (phi(x)-phi(y))^2 C_{x,y}.
        pair_sum = 0.0
        for i in range(chain.n_states - 1):
            diff = phi[i + 1] - phi[i]
            pair_sum += 2.0 * 0.5 * chain.conductances[i] * diff * diff
        assert dirichlet_energy(chain, phi) == pytest.approx(pair_sum, rel=1e-12, abs=1e-12)

    def test_bilinear_consistency(self, flat_chain_16):
        rng = np.random.default_rng(0)
        u = rng.normal(size=16)
        v = rng.normal(size=16)
        quad = dirichlet_energy(flat_chain_16, u + v)
        expanded = (dirichlet_energy(flat_chain_16, u)
                    + 2.0 * dirichlet_energy(flat_chain_16, u, v)
                    + dirichlet_energy(flat_chain_16, v))
        assert quad == pytest.approx(expanded, rel=1e-12)

    def test_length_mismatch(self, flat_chain_4):
        with pytest.raises(ValidationError):
            dirichlet_energy(flat_chain_4, [1.0, 2.0])


class TestEnergyBounds:
    def scenarios(self):
        yield ScaleFunction.identity()
        yield ScaleFunction.piecewise_linear([(0, 0), (0.4, 0.1), (1, 1)])
        yield build_fat_cantor_scale(6)

    def test_restriction_energy_below_continuum(self, lebesgue):
        for scale in self.scenarios():
            u = SAdaptedFunction([(0.0, 0.0), (0.3 * scale.range_length, 1.0),
                                  (scale.range_length, 0.2)], scale)
            cont = continuous_energy(scale, u)
            for n in (8, 16, 64):
                p = build_partition("uniform", n=n)
                chain = build_trace_chain(p, scale, lebesgue)
                disc = dirichlet_energy(chain, u.value(chain.grid))
                assert disc <= cont + 1e-12

    def test_refinement_monotonicity(self, fat_scale_8, lebesgue):
        u = SAdaptedFunction([(0.0, 0.0), (0.2, 1.0), (0.5, -0.4)], fat_scale_8)
        prev = -np.inf
        for n in (8, 16, 32, 64):
            p = build_partition("uniform", n=n)
            chain = build_trace_chain(p, fat_scale_8, lebesgue)
            disc = dirichlet_energy(chain, u.value(chain.grid))
            assert disc >= prev - 1e-13
            prev = disc

    def test_interpolation_energy_equality_for_scale(self, fat_scale_8, lebesgue):
        u = SAdaptedFunction.scale_itself(fat_scale_8)
        cont = continuous_energy(fat_scale_8, u)
        for n in (8, 32):
            p = build_partition("uniform", n=n)
            e = interpolation_energy(p, fat_scale_8, u.value(p.points))
            assert e == pytest.approx(cont, abs=1e-13)


class TestHarmonicExtension:
    def test_grid_points_fixed(self, flat_chain_16):
        rng = np.random.default_rng(1)
        phi = rng.normal(size=16)
        vals = harmonic_extension(flat_chain_16, ScaleFunction.identity(), phi,
                                  flat_chain_16.grid)
        assert np.allclose(vals, phi, atol=1e-14)

    def test_midpoint_flat(self, lebesgue):
        p = build_partition("explicit", points=[0.0, 0.5, 1.0])
        chain = build_trace_chain(p, ScaleFunction.identity(), lebesgue)
        val = harmonic_extension(chain, ScaleFunction.identity(),
                                 [0.0, 1.0], 0.25)
        assert val == pytest.approx(0.5)

    def test_constant_on_last_cell(self, flat_chain_4):
        phi = [0.0, 0.25, 0.5, 0.75]
        for x in (0.75, 0.8, 0.99, 1.0):
            assert harmonic_extension(flat_chain_4, ScaleFunction.identity(),
                                      phi, x) == pytest.approx(0.75)

    def test_fat_cantor_ratio(self, lebesgue):
        scale = build_fat_cantor_scale(5)
        p = build_partition("explicit", points=[0.0, 0.375, 1.0])
        chain = build_trace_chain(p, scale, lebesgue)
        got = harmonic_extension(chain, scale, [0.0, 1.0], 0.25)
        expected = scale_eval(scale, 0.25) / scale_eval(scale, 0.375)
        assert got == pytest.approx(expected, rel=1e-14)

    @settings(max_examples=30, deadline=None)
    @given(j=st.integers(min_value=0, max_value=15),
           x=st.floats(min_value=0.0, max_value=1.0))
    def test_monotone_in_phi(self, flat_chain_16, j, x):
        rng = np.random.default_rng(4)
        phi = rng.normal(size=16)
        bumped = phi.copy()
        bumped[j] += 0.5
        s = ScaleFunction.identity()
        assert (harmonic_extension(flat_chain_16, s, bumped, x)
                >= harmonic_extension(flat_chain_16, s, phi, x) - 1e-14)

    def test_domain_error(self, flat_chain_4):
        with pytest.raises(DomainError):
            harmonic_extension(flat_chain_4, ScaleFunction.identity(),
                               [0.0] * 4, 1.2)


class TestHittingProbRight:
    def test_identity(self):
        assert hitting_prob_right(ScaleFunction.identity(), 0.0, 1.0, 0.3) == pytest.approx(0.3)

    def test_scale_midpoint(self, fat_scale_8):
        # x chosen so s(x) is halfway between s(a) and s(b).
        s = fat_scale_8
        a, b = 0.0, 1.0
        target = 0.5 * (scale_eval(s, a) + scale_eval(s, b))
        x = float(s.inverse(target))
        assert hitting_prob_right(s, a, b, x) == pytest.approx(0.5, abs=1e-12)

    def test_fat_cantor_pinned(self):
        s = build_fat_cantor_scale(4)
        assert hitting_prob_right(s, 0.0, 0.625, 0.375) == pytest.approx(1.0 / 3.0, rel=1e-14)

    def test_ordering_error(self):
        with pytest.raises(DomainError):
            hitting_prob_right(ScaleFunction.identity(), 0.5, 1.0, 0.25)


class TestGeneratorMatrix:
    def test_interior_row_flat4(self, flat_chain_4):
        op = generator_matrix(flat_chain_4)
        assert op.sub[0] == pytest.approx(8.0)
        assert op.diag[1] == pytest.approx(-16.0)
        assert op.sup[1] == pytest.approx(8.0)

    def test_row_sums_zero(self, flat_chain_16, fat_scale_8, lebesgue):
        for chain in (flat_chain_16,
                      build_trace_chain(build_partition("uniform", n=33),
                                        fat_scale_8, lebesgue)):
            op = generator_matrix(chain)
            rs = op.matvec(np.ones(chain.n_states))
            assert np.max(np.abs(rs)) <= 1e-12 * max(1.0, np.max(chain.rates))

    def test_detailed_balance(self, atom_speed, fat_scale_8):
        p = build_partition("uniform", n=9)
        chain = build_trace_chain(p, fat_scale_8, atom_speed)
        op = generator_matrix(chain)
        lhs = chain.masses[:-1] * op.sup
        rhs = chain.masses[1:] * op.sub
        assert np.allclose(lhs, chain.conductances, rtol=1e-14)
        assert np.allclose(rhs, chain.conductances, rtol=1e-14)

    def test_serialization_roundtrip(self, flat_chain_4):
        doc = flat_chain_4.to_dict()
        assert doc["conductances"] == [2.0, 2.0, 2.0]
        assert doc["n_states"] == 4
        assert doc["total_mass"] == pytest.approx(1.0)
