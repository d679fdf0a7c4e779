import math

import numpy as np
import pytest

from feplab.errors import DomainError, MassConsistencyError, ShapeMismatchError
from feplab.lattice import Configuration, enumerate_ergodic, particle_count
from feplab.mapping import (
    Profile,
    SepConfiguration,
    empirical_push_forward,
    gamma,
    gamma_all,
    macro_forward,
    macro_inverse,
    phi,
    phi_inverse,
    sep_empirical_density,
)


class TestPhi:
    def test_all_ones(self):
        xi = phi(Configuration(7, np.ones(6, np.uint8)))
        assert xi.M == 8
        assert xi.to_string() == "1111111"

    def test_worked_example(self):
        xi = phi(Configuration.from_string("110101"))
        assert (xi.M, xi.particle_count()) == (6, 3)
        assert xi.to_string() == "11001"

    def test_shape_law(self):
        for N in range(2, 13):
            for eta in enumerate_ergodic(N):
                k = particle_count(eta)
                xi = phi(eta)
                assert xi.M == k + 2
                assert xi.particle_count() == 2 * k - N + 2

    def test_rejects_non_ergodic(self):
        with pytest.raises(DomainError):
            phi(Configuration.from_string("1001"))

    def test_bijection_onto_sector(self):
        # encoded 9-particle states on 15 sites exhaust the 5-particle
        # code words on 11 sites
        images = {phi(c).to_string() for c in enumerate_ergodic(15, 9)}
        assert len(images) == 252
        assert all(s.count("1") == 5 and len(s) == 10 for s in images)


class TestPhiInverse:
    def test_worked_example(self):
        xi = SepConfiguration(6, [1, 1, 0, 0, 1])
        assert phi_inverse(xi, 7).to_string() == "110101"

    def test_all_ones(self):
        # a full code word on M-1 sites decodes to the full state on N = M - 1
        xi = SepConfiguration(6, np.ones(5, np.uint8))
        assert phi_inverse(xi, 5).to_string() == "1111"

    def test_round_trip_exhaustive(self):
        for N in range(2, 15):
            for eta in enumerate_ergodic(N):
                assert phi_inverse(phi(eta), N) == eta

    def test_shape_mismatch(self):
        with pytest.raises(ShapeMismatchError):
            phi_inverse(SepConfiguration(6, [1, 1, 0, 0, 1]), 9)


class TestCardinality:
    def test_binomial_counts(self):
        for N in range(2, 15):
            for k in range((N - 1) // 2, N):
                size = len(enumerate_ergodic(N, k))
                ell = 2 * k - N + 2
                assert size == math.comb(k + 1, ell)


class TestGamma:
    def test_worked_example(self):
        xi = SepConfiguration(6, [1, 1, 0, 0, 1])
        assert [gamma(xi, y) for y in (2, 3, 4, 5)] == [1, 2, 4, 6]

    def test_all_ones_and_zeros(self):
        ones = SepConfiguration(6, np.ones(5, np.uint8))
        assert [gamma(ones, y) for y in range(2, 6)] == [1, 2, 3, 4]
        zeros = SepConfiguration(6, np.zeros(5, np.uint8))
        assert [gamma(zeros, y) for y in range(2, 6)] == [2, 4, 6, 8]

    def test_range_errors(self):
        xi = SepConfiguration(6, [1, 1, 0, 0, 1])
        with pytest.raises(DomainError):
            gamma(xi, 1)
        with pytest.raises(DomainError):
            gamma(xi, 6)

    def test_enumerates_particle_positions(self):
        for N in range(3, 12):
            for eta in enumerate_ergodic(N):
                xi = phi(eta)
                positions = gamma_all(xi)
                assert np.all(np.diff(positions) > 0)
                expected = np.flatnonzero(eta.occupations) + 1
                assert np.array_equal(positions, expected)


class TestMacroForward:
    def test_constant_one(self):
        omega, mm = macro_forward(Profile.fep(np.ones(50)))
        assert mm.m == 1.0
        assert np.allclose(omega.values, 1.0)

    def test_constant_three_quarters(self):
        omega, mm = macro_forward(Profile.fep(np.full(64, 0.75)))
        assert mm.m == pytest.approx(0.75)
        assert np.allclose(omega.values, 2.0 / 3.0)

    def test_linear_closed_form(self):
        K = 400
        u = (np.arange(K) + 0.5) / K
        omega, mm = macro_forward(Profile.fep(0.5 + u / 2))
        assert mm.m == pytest.approx(0.75, abs=1e-12)
        # v(u) = (2u + u^2)/3 exactly at the grid nodes
        nodes = np.array([0.25, 0.5, 0.75, 1.0])
        assert mm.v_of_u(nodes) == pytest.approx((2 * nodes + nodes**2) / 3, abs=1e-12)
        assert omega.values[0] == pytest.approx(0.0, abs=5e-3)
        assert omega.values[-1] == pytest.approx(1.0, abs=5e-3)

    def test_domain_guard(self):
        K = 10
        flat = Profile.fep(np.full(K, 0.5))
        with pytest.raises(DomainError):
            macro_forward(flat)
        omega, mm = macro_forward(flat, relaxed=True)
        assert np.allclose(omega.values, 0.0)
        assert mm.m == pytest.approx(0.5)

    def test_mass_identity_native(self):
        rng = np.random.default_rng(5)
        for _ in range(10):
            vals = rng.uniform(0.55, 1.0, size=200)
            _, mm = macro_forward(Profile.fep(vals))
            assert mm.mass_identity_residual() <= 1e-9

    def test_monotone_coordinates(self):
        u = (np.arange(100) + 0.5) / 100
        _, mm = macro_forward(Profile.fep(0.6 + 0.3 * u))
        assert np.all(np.diff(mm.v_nodes) > 0)
        grid = np.linspace(0, 1, 101)
        # composition identity within interpolation tolerance
        assert np.abs(mm.u_of_v(mm.v_of_u(grid)) - grid).max() <= 1e-12 * 100


class TestMacroInverse:
    def test_constant_cases(self):
        rho = macro_inverse(Profile.sep(np.ones(30)), 1.0)
        assert np.allclose(rho.values, 1.0)
        rho = macro_inverse(Profile.sep(np.full(30, 2.0 / 3.0)), 0.75)
        assert np.allclose(rho.values, 0.75)

    def test_mass_consistency_guard(self):
        with pytest.raises(MassConsistencyError):
            macro_inverse(Profile.sep(np.full(30, 2.0 / 3.0)), 0.9)

    def test_round_trip(self):
        K = 400
        u = (np.arange(K) + 0.5) / K
        rho = Profile.fep(0.5 + u / 2)
        omega, mm = macro_forward(rho)
        back = macro_inverse(omega, mm.m)
        assert np.abs(back.values - rho.values).mean() <= 1e-3

    def test_forward_of_inverse(self):
        K = 200
        v = (np.arange(K) + 0.5) / K
        omega = Profile.sep(0.2 + 0.6 * v)
        m = 1.0 / np.mean(2.0 - omega.values)
        rho = macro_inverse(omega, m)
        again, _ = macro_forward(rho, relaxed=True)
        assert np.abs(again.values - omega.values).mean() <= 2e-3


class TestPushForward:
    def test_all_ones(self):
        e = empirical_push_forward(Configuration(9, np.ones(8, np.uint8)), 4)
        assert np.allclose(e.values, 1.0)

    def test_single_cell(self):
        e = empirical_push_forward(Configuration.from_string("110101"), 1)
        assert e.values == pytest.approx([3.0 / 5.0])

    def test_matches_sep_density(self):
        eta = Configuration.from_string("11010111")
        xi = phi(eta)
        a = empirical_push_forward(eta, 3)
        b = sep_empirical_density(xi, 3)
        assert np.array_equal(a.values, b.values)


class TestProfileType:
    def test_range_enforced(self):
        with pytest.raises(DomainError):
            Profile.fep(np.array([0.4, 0.8]))
        with pytest.raises(DomainError):
            Profile.sep(np.array([-0.1, 0.5]))

    def test_lookup(self):
        p = Profile.sep(np.array([0.1, 0.9]))
        assert p(0.2) == pytest.approx(0.1)
        assert p(0.7) == pytest.approx(0.9)

    def test_serialization(self, tmp_path):
        p = Profile.fep(np.linspace(0.6, 0.9, 7))
        path = tmp_path / "prof.txt"
        p.save(path)
        q = Profile.load(path, 0.5, 1.0)
        assert np.array_equal(p.values, q.values)

    def test_massmap_serialization(self, tmp_path):
        _, mm = macro_forward(Profile.fep(np.full(5, 0.8)))
        path = tmp_path / "mm.txt"
        mm.save(path)
        data = np.loadtxt(path)
        assert data.shape == (6, 3)
        assert data[0, 0] == 0.0 and data[-1, 1] == 1.0
