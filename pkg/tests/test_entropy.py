import numpy as np
import pytest
from scipy.integrate import quad

from feplab.entropy import (
    EntropyPair,
    SpaceTimeFunction,
    TestFunction,
    TimeBump,
    builtin_pairs,
    check_otto_boundary,
    entropy_residual,
    kruzhkov_pair,
    make_boundary_pair,
    quadratic_pair,
    random_test_functions,
    weak_residual,
)
from feplab.errors import DomainError
from feplab.mapping import Profile
from feplab.pde import (
    DIRICHLET_ENTROPY,
    SIDE_SEP,
    GridSolution,
    fn_h_prime,
    fn_J_prime,
    solve_burgers_entropy,
    solve_conservation_law_entropy,
    solve_fast_diffusion_neumann,
    solve_heat_neumann,
)


def cells(K):
    return (np.arange(K) + 0.5) / K


def quad_companion(pair, r, tol=1e-12):
    fp = fn_h_prime if pair.flux == "h" else fn_J_prime
    pts = sorted(
        {float(np.clip(x, min(pair.q, r), max(pair.q, r))) for x in pair._t_breaks}
    )
    val, _ = quad(
        lambda t: fp(t) * pair.F_prime(t), pair.q, r,
        points=pts, limit=400, epsabs=tol, epsrel=tol,
    )
    return val


class TestPairs:
    def test_companion_matches_quadrature(self):
        rng = np.random.default_rng(1)
        for flux, lo, hi in (("J", 0.0, 1.0), ("h", 0.5, 1.0)):
            for pair in builtin_pairs(flux):
                for r in rng.uniform(lo, hi, 6):
                    assert pair.Q(r) == pytest.approx(
                        quad_companion(pair, r), abs=1e-10
                    )

    def test_validation_passes(self):
        for flux in ("J", "h"):
            for pair in builtin_pairs(flux):
                assert pair.validate() <= 1e-8

    def test_convexity_detector(self):
        concave = EntropyPair("J", q=0.5, gamma=1.0, breaks=[], polys=[[0.0, -2.0]])
        with pytest.raises(DomainError):
            concave.validate()

    def test_kruzhkov_shape(self):
        pair = kruzhkov_pair("J", 0.4, delta=1e-3)
        # coincides with |r - q| outside the mollification window
        assert pair.F(0.9) == pytest.approx(0.5, abs=1e-12)
        assert pair.F(0.1) == pytest.approx(0.3, abs=1e-12)
        assert pair.F_prime(0.4) == 0.0
        assert pair.F_second(0.4) > 0

    def test_quadratic_closed_form(self):
        pair = quadratic_pair("J", 0.25)
        r = np.linspace(0, 1, 9)
        assert pair.F(r) == pytest.approx((r - 0.25) ** 2, abs=1e-13)
        # exact polynomial companion: integral of (1-2t) * 2(t-c)
        c = 0.25
        exact = (
            (1 + 2 * c) * (r**2 - c**2) - 2 * c * (r - c) - 4 / 3 * (r**3 - c**3)
        )
        assert pair.Q(r) == pytest.approx(exact, abs=1e-13)


class TestBoundaryPairs:
    def test_anchor_triple_vanishes(self):
        bp = make_boundary_pair(10.0, 0.0, "J")
        for q in (0.0, 0.5, 1.0):
            assert bp.F(q, q) == pytest.approx(0.0, abs=1e-14)
            assert bp.section(q).F_prime(q) == pytest.approx(0.0, abs=1e-14)
            assert bp.Q(q, q) == pytest.approx(0.0, abs=1e-14)
        bph = make_boundary_pair(10.0, 0.5, "h")
        for q in (0.5, 0.75, 1.0):
            assert bph.F(q, q) == pytest.approx(0.0, abs=1e-14)
            assert bph.Q(q, q) == pytest.approx(0.0, abs=1e-14)

    def test_large_gamma_limits(self):
        bp = make_boundary_pair(1e4, 0.0, "J")
        # companion tends to (J(r) - J(q)) 1_{r >= q}
        assert abs(bp.Q(1.0)) <= 1e-3
        assert bp.Q(0.6) == pytest.approx(0.24, abs=1e-3)
        assert bp.Q(0.3, 0.7) == pytest.approx(0.0, abs=1e-12)
        # entropy tends to (r - q)^+
        assert bp.F(0.6) == pytest.approx(0.6, abs=1e-3)
        assert bp.F(0.0, 0.5) == pytest.approx(0.0, abs=1e-12)

    def test_sections_are_lax_pairs(self):
        bp = make_boundary_pair(25.0, 0.3, "J")
        for q in (0.0, 0.3, 0.9):
            assert bp.section(q).validate() <= 1e-8

    def test_convexity_sampled(self):
        sec = make_boundary_pair(10.0, 0.5, "J").section()
        nodes = np.linspace(0.01, 0.99, 50)
        assert np.all(sec.F_second(nodes) >= 0.0)

    def test_companion_matches_quadrature(self):
        sec = make_boundary_pair(7.0, 0.6, "h").section()
        for r in (0.5, 0.62, 0.8, 1.0):
            assert sec.Q(r) == pytest.approx(quad_companion(sec, r), abs=1e-10)

    def test_invalid_arguments(self):
        with pytest.raises(DomainError):
            make_boundary_pair(-1.0, 0.5, "J")
        with pytest.raises(DomainError):
            make_boundary_pair(1.0, 0.3, "h")
        with pytest.raises(DomainError):
            make_boundary_pair(1.0, 0.5, "nope")


class TestEntropyResidual:
    def setup_method(self):
        self.save = np.linspace(0.0, 0.25, 126)

    def test_constant_in_time_field_vanishes(self):
        K = 200
        ini = Profile.sep((cells(K) > 0.4).astype(float))
        sol = solve_burgers_entropy(ini, 1.0, 1.0, 0.25, save_times=self.save)
        pair = kruzhkov_pair("J", 0.5)
        phi = TestFunction(0.125, 0.1, 0.4, 0.2)
        assert abs(entropy_residual(sol, pair, phi)) <= 1e-12 or entropy_residual(
            sol, pair, phi
        ) >= 0

    def test_godunov_runs_pass_all_pairs(self):
        K = 400
        data = [
            Profile.sep((cells(K) > 0.4).astype(float)),
            Profile.sep(np.where(cells(K) < 0.5, 1.0, 0.0)),
        ]
        phis = random_test_functions(20, 0.25, seed=3)
        for ini in data:
            sol = solve_burgers_entropy(ini, 1.0, 1.0, 0.25, save_times=self.save)
            for pair in builtin_pairs("J"):
                for phi in phis:
                    assert entropy_residual(sol, pair, phi) >= -1e-3

    def test_smooth_runs_near_equality(self):
        K = 400
        ini = Profile.sep(cells(K).copy())
        save = np.linspace(0.0, 0.1, 101)
        sol = solve_burgers_entropy(ini, 1.0, 1.0, 0.1, save_times=save)
        for pair in builtin_pairs("J"):
            for phi in random_test_functions(5, 0.1, seed=9):
                assert abs(entropy_residual(sol, pair, phi)) <= 1e-3

    def test_expansion_shock_detected(self):
        # hand-built non-entropic field: the decreasing jump should shed a
        # rarefaction but is frozen instead
        K = 400
        v = cells(K)
        field = np.tile(np.where(v < 0.4, 1.0, 0.0), (self.save.size, 1))
        anti = GridSolution(
            "burgers-dirichlet", DIRICHLET_ENTROPY, self.save, field,
            {"p_eff": 1.0, "side": SIDE_SEP, "sigma_eff": 0.0},
        )
        phi = TestFunction(0.125, 0.1, 0.4, 0.15)
        worst = min(entropy_residual(anti, pair, phi) for pair in builtin_pairs("J"))
        assert worst < -0.01

    def test_support_guard(self):
        K = 100
        ini = Profile.sep((cells(K) > 0.4).astype(float))
        sol = solve_burgers_entropy(ini, 1.0, 1.0, 0.25, save_times=self.save)
        with pytest.raises(DomainError):
            entropy_residual(sol, quadratic_pair("J", 0.5), TestFunction(0.1, 0.2, 0.5, 0.2))


class TestWeakResidual:
    def test_constant_solution_exact(self):
        ini = Profile.sep(np.full(200, 0.37))
        sol = solve_heat_neumann(ini, 1.0, 1.0, 0.1, save_times=np.linspace(0, 0.1, 101))
        G = SpaceTimeFunction(
            lambda t, u: np.cos(np.pi * np.asarray(u)) + 0.3 * np.asarray(t),
            lambda t, u: 0.3 * np.ones_like(np.asarray(u, float)),
            lambda t, u: -np.pi * np.sin(np.pi * np.asarray(u)),
        )
        assert abs(weak_residual(sol, G, 0.1)) <= 1e-10

    def test_heat_run_small_defect(self):
        K = 400
        ini = Profile.sep(0.5 + 0.25 * np.cos(np.pi * cells(K)))
        sol = solve_heat_neumann(ini, 1.0, 1.0, 0.1, save_times=np.linspace(0, 0.1, 101))
        G = SpaceTimeFunction(
            lambda t, u: np.cos(np.pi * np.asarray(u)),
            lambda t, u: np.zeros_like(np.asarray(u, float)),
            lambda t, u: -np.pi * np.sin(np.pi * np.asarray(u)),
        )
        assert abs(weak_residual(sol, G, 0.1)) <= 1e-3

    def test_defect_shrinks_under_refinement(self):
        G = SpaceTimeFunction(
            lambda t, u: np.cos(np.pi * np.asarray(u)),
            lambda t, u: np.zeros_like(np.asarray(u, float)),
            lambda t, u: -np.pi * np.sin(np.pi * np.asarray(u)),
        )
        res = {}
        for K in (200, 400):
            # asymmetric datum so the pairings against cos(pi u) do not
            # vanish by symmetry; the save schedule scales with the grid
            # since both enter the first-order defect envelope
            ini = Profile.fep(0.7 + 0.125 * cells(K))
            sol = solve_fast_diffusion_neumann(
                ini, 1.0, 0.1, save_times=np.linspace(0, 0.1, K // 2 + 1)
            )
            res[K] = abs(weak_residual(sol, G, 0.1))
        assert res[400] < res[200]
        assert res[400] / res[200] == pytest.approx(0.5, abs=0.2)

    def test_boundary_type_guard(self):
        K = 100
        ini = Profile.sep((cells(K) > 0.4).astype(float))
        sol = solve_burgers_entropy(ini, 1.0, 1.0, 0.1)
        G = SpaceTimeFunction(lambda t, u: np.asarray(u), lambda t, u: 0.0, lambda t, u: 1.0)
        with pytest.raises(DomainError):
            weak_residual(sol, G, 0.1)


class TestOttoBoundary:
    def setup_method(self):
        self.save = np.linspace(0.0, 0.25, 101)
        self.phi = TimeBump(0.125, 0.1)

    def test_stationary_shock_traces(self):
        K = 400
        ini = Profile.sep((cells(K) > 0.4).astype(float))
        sol = solve_burgers_entropy(ini, 1.0, 1.0, 0.25, save_times=self.save)
        left = check_otto_boundary(sol, "left", 0.0, self.phi)
        right = check_otto_boundary(sol, "right", 1.0, self.phi)
        assert np.allclose(left.traces, 0.0) and np.allclose(right.traces, 1.0)
        assert left.signs_ok() and right.signs_ok()
        assert left.dichotomy_fraction() == 1.0
        assert right.dichotomy_fraction() == 1.0

    def test_particle_frame_traces(self):
        K = 400
        ini = Profile.fep(np.where(cells(K) < 0.5, 0.5, 1.0))
        sol = solve_conservation_law_entropy(ini, 1.0, 0.25, save_times=self.save)
        left = check_otto_boundary(sol, "left", 0.5, self.phi)
        right = check_otto_boundary(sol, "right", 1.0, self.phi)
        assert np.allclose(left.traces, 0.5) and np.allclose(right.traces, 1.0)
        assert left.signs_ok() and right.signs_ok()
        assert left.dichotomy_fraction() == 1.0

    def test_constant_equality_case(self):
        sol = solve_burgers_entropy(
            Profile.sep(np.ones(200)), 1.0, 1.0, 0.25, save_times=self.save
        )
        rep = check_otto_boundary(sol, "right", 1.0, self.phi)
        assert all(v == pytest.approx(0.0, abs=1e-14) for v in rep.integrals.values())

    def test_rejects_non_entropy_runs(self):
        sol = solve_heat_neumann(Profile.sep(np.full(50, 0.5)), 1.0, 1.0, 0.1)
        with pytest.raises(DomainError):
            check_otto_boundary(sol, "left", 0.0, self.phi)


class TestTestFunctions:
    def test_bump_support_and_smoothness(self):
        phi = TestFunction(0.5, 0.2, 0.5, 0.25)
        assert phi.value(0.29, 0.5) == 0.0
        assert phi.value(0.5, 0.76) == 0.0
        assert phi.value(0.5, 0.5) == pytest.approx(1.0)
        h = 1e-6
        t, u = 0.45, 0.55
        fd_t = (phi.value(t + h, u) - phi.value(t - h, u)) / (2 * h)
        fd_u = (phi.value(t, u + h) - phi.value(t, u - h)) / (2 * h)
        assert fd_t == pytest.approx(phi.dt(t, u), rel=1e-6)
        assert fd_u == pytest.approx(phi.du(t, u), rel=1e-6)

    def test_random_supports_inside_box(self):
        for phi in random_test_functions(50, 0.3, seed=7):
            t_lo, t_hi, u_lo, u_hi = phi.support
            assert 0 < t_lo < t_hi < 0.3
            assert 0 < u_lo < u_hi < 1
