import numpy as np
import pytest

from feplab.errors import DomainError, StabilityError
from feplab.mapping import Profile, macro_forward, macro_inverse
from feplab.pde import (
    SIDE_SEP,
    GridSolution,
    _godunov,
    fn_a,
    fn_a_prime,
    fn_h,
    fn_h_prime,
    fn_J,
    fn_J_prime,
    solve_burgers_entropy,
    solve_conservation_law_entropy,
    solve_convection_diffusion_robin,
    solve_fast_diffusion_neumann,
    solve_heat_neumann,
    solve_viscous_burgers_robin,
)


def cells(K):
    return (np.arange(K) + 0.5) / K


class TestConstitutiveFunctions:
    def test_values(self):
        assert fn_a(0.5) == 0.0 and fn_a(1.0) == 1.0
        assert fn_h(0.5) == 0.0 and fn_h(1.0) == 0.0
        assert fn_J(0.5) == pytest.approx(0.25)
        assert fn_h(0.75) == pytest.approx(1.0 / 6.0)

    def test_derivatives_match_finite_differences(self):
        h = 1e-6
        r = np.linspace(0.5 + 2 * h, 1.0 - 2 * h, 100)
        assert np.abs((fn_a(r + h) - fn_a(r - h)) / (2 * h) - fn_a_prime(r)).max() <= 1e-8
        assert np.abs((fn_h(r + h) - fn_h(r - h)) / (2 * h) - fn_h_prime(r)).max() <= 1e-8
        w = np.linspace(2 * h, 1.0 - 2 * h, 100)
        assert np.abs((fn_J(w + h) - fn_J(w - h)) / (2 * h) - fn_J_prime(w)).max() <= 1e-8

    def test_domain_errors(self):
        with pytest.raises(DomainError):
            fn_a(0.3)
        with pytest.raises(DomainError):
            fn_h(1.2)
        with pytest.raises(DomainError):
            fn_J(-0.2)


class TestGodunovFlux:
    def test_orientation_against_riemann_facts(self):
        # upward jumps of a concave current take the endpoint minimum, so
        # the 0 -> 1 shock carries zero flux and stays put
        assert _godunov(0.0, 1.0, SIDE_SEP) == 0.0
        # downward jumps straddling the critical point release the maximum
        assert _godunov(1.0, 0.0, SIDE_SEP) == pytest.approx(0.25)
        assert _godunov(0.5, 1.0, 1) == 0.0
        assert _godunov(1.0, 0.5, 1) == pytest.approx(fn_h(1 / np.sqrt(2)))
        # pure upwinding away from the critical point
        assert _godunov(0.1, 0.2, SIDE_SEP) == pytest.approx(fn_J(0.1))
        assert _godunov(0.8, 0.9, SIDE_SEP) == pytest.approx(fn_J(0.9))


class TestHeat:
    def test_constant_stationary(self):
        sol = solve_heat_neumann(Profile.sep(np.full(80, 0.42)), 1.0, 1.0, 0.1)
        assert np.array_equal(sol.final(), np.full(80, 0.42))

    def test_cosine_mode_oracle(self):
        K = 400
        v = cells(K)
        ini = Profile.sep(0.5 + 0.25 * np.cos(np.pi * v))
        sol = solve_heat_neumann(ini, 1.0, 1.0, 0.1)
        exact = 0.5 + 0.25 * np.cos(np.pi * v) * np.exp(-np.pi**2 * 0.1)
        assert np.abs(sol.final() - exact).max() <= 5e-4

    def test_mass_conserved(self):
        K = 100
        ini = Profile.sep(0.3 + 0.4 * (cells(K) > 0.5))
        sol = solve_heat_neumann(ini, 1.0, 0.8, 0.5)
        assert abs(sol.mass()[-1] - sol.mass()[0]) <= 1e-10

    def test_stability_rejection_reports_bound(self):
        ini = Profile.sep(np.full(100, 0.5))
        with pytest.raises(StabilityError) as err:
            solve_heat_neumann(ini, 1.0, 1.0, 0.1, dt=1.0)
        assert err.value.dt_max == pytest.approx(0.45 * 1e-4)


class TestFastDiffusion:
    def test_constant_stationary(self):
        sol = solve_fast_diffusion_neumann(Profile.fep(np.full(60, 0.77)), 1.0, 0.1)
        assert np.array_equal(sol.final(), np.full(60, 0.77))

    def test_mass_conserved(self):
        K = 100
        ini = Profile.fep(0.6 + 0.3 * (cells(K) > 0.4))
        sol = solve_fast_diffusion_neumann(ini, 1.0, 0.5)
        assert abs(sol.mass()[-1] - sol.mass()[0]) <= 1e-10

    def test_quick_commutation_with_heat(self):
        # the K=800 version lives in the acceptance suite
        K = 200
        u = cells(K)
        rho0 = Profile.fep(0.75 + 0.125 * u)
        om0, mm = macro_forward(rho0)
        heat = solve_heat_neumann(om0, 1.0, mm.m, 0.05)
        fd = solve_fast_diffusion_neumann(rho0, 1.0, 0.05)
        mapped = macro_inverse(Profile.sep(np.clip(heat.final(), 0, 1)), mm.m)
        assert np.abs(mapped.values - fd.final()).max() <= 2e-3

    def test_hull_preserved(self):
        K = 120
        ini = Profile.fep(0.65 + 0.2 * np.sin(2 * np.pi * cells(K)) ** 2)
        sol = solve_fast_diffusion_neumann(ini, 1.0, 0.2)
        assert sol.values.min() >= ini.values.min() - 1e-12
        assert sol.values.max() <= ini.values.max() + 1e-12


class TestViscousBurgers:
    def test_reduces_to_heat_without_drift(self):
        ini = Profile.sep(0.5 + 0.2 * np.cos(np.pi * cells(150)))
        a = solve_heat_neumann(ini, 1.0, 1.0, 0.03)
        b = solve_viscous_burgers_robin(ini, 1.0, 0.0, 1.0, 0.03)
        assert np.abs(a.final() - b.final()).max() <= 1e-12

    def test_mass_conserved_with_drift(self):
        ini = Profile.sep(0.4 + 0.3 * (cells(100) < 0.3))
        sol = solve_viscous_burgers_robin(ini, 1.0, 1.0, 0.9, 0.5)
        assert abs(sol.mass()[-1] - sol.mass()[0]) <= 1e-10

    def test_steady_state_is_discrete_logistic(self):
        from scipy.optimize import brentq

        K = 400
        v = cells(K)
        ini = Profile.sep(0.5 + 0.25 * np.cos(np.pi * v))  # mass 1/2
        sol = solve_viscous_burgers_robin(ini, 1.0, 1.0, 1.0, 3.0)
        w = sol.final()
        dv = 1.0 / K
        god = np.array([_godunov(w[i], w[i + 1], SIDE_SEP) for i in range(K - 1)])
        residual = (w[1:] - w[:-1]) / dv - god
        assert np.abs(residual).max() <= 1e-6
        mass = float(ini.values.mean())
        vstar = brentq(
            lambda s: np.log((1 + np.exp(1 - s)) / (1 + np.exp(-s))) - mass, -20, 20
        )
        oracle = 1.0 / (1.0 + np.exp(-(v - vstar)))
        assert np.abs(w - oracle).max() <= 1e-3


class TestConvectionDiffusion:
    def test_reduces_to_fast_diffusion_without_drift(self):
        ini = Profile.fep(0.7 + 0.15 * np.cos(np.pi * cells(150)))
        a = solve_fast_diffusion_neumann(ini, 1.0, 0.03)
        b = solve_convection_diffusion_robin(ini, 1.0, 0.0, 0.03)
        assert np.abs(a.final() - b.final()).max() <= 1e-12

    def test_mass_conserved(self):
        ini = Profile.fep(np.where(cells(100) < 0.6, 0.8, 0.6))
        sol = solve_convection_diffusion_robin(ini, 1.0, 1.0, 0.5)
        assert abs(sol.mass()[-1] - sol.mass()[0]) <= 1e-10

    def test_quick_commutation_with_viscous_burgers(self):
        K = 200
        rho0 = Profile.fep(0.8 + 0.15 * np.cos(np.pi * cells(K)))
        om0, mm = macro_forward(rho0)
        vb = solve_viscous_burgers_robin(om0, 1.0, 1.0, mm.m, 0.05)
        cd = solve_convection_diffusion_robin(rho0, 1.0, 1.0, 0.05)
        mapped = macro_inverse(Profile.sep(np.clip(vb.final(), 0, 1)), mm.m)
        assert np.abs(mapped.values - cd.final()).max() <= 2e-3


class TestBurgersEntropy:
    def test_stationary_shock_machine_exact(self):
        K = 200
        ini = Profile.sep((cells(K) > 0.4).astype(float))
        sol = solve_burgers_entropy(ini, 1.0, 1.0, 0.3)
        assert np.array_equal(sol.final(), ini.values)

    def test_constants_with_matching_boundary(self):
        zeros = solve_burgers_entropy(Profile.sep(np.zeros(50)), 1.0, 1.0, 0.2)
        # 0 at the left wall matches, the 0 -> 1 right boundary layer stays
        # outside because the wall flux vanishes
        assert np.array_equal(zeros.final(), np.zeros(50))
        ones = solve_burgers_entropy(Profile.sep(np.ones(50)), 1.0, 1.0, 0.2)
        assert np.array_equal(ones.final(), np.ones(50))

    def test_godunov_vs_viscosity(self):
        K = 400
        ini = Profile.sep((cells(K) > 2 / 3).astype(float))
        god = solve_burgers_entropy(ini, 1.0, 0.75, 0.25)
        visc = solve_burgers_entropy(ini, 1.0, 0.75, 0.25, method="viscosity", eps=1e-3)
        assert np.abs(god.final() - visc.final()).mean() <= 0.05

    def test_viscosity_ladder_converges_toward_godunov(self):
        K = 200
        ini = Profile.sep(np.where(cells(K) < 0.5, 1.0, 0.0))
        god = solve_burgers_entropy(ini, 1.0, 1.0, 0.15)
        dists = []
        for eps in (1e-2, 3e-3, 1e-3):
            visc = solve_burgers_entropy(ini, 1.0, 1.0, 0.15, method="viscosity", eps=eps)
            dists.append(np.abs(god.final() - visc.final()).mean())
        assert dists[2] < dists[0]

    def test_cfl_rejection(self):
        ini = Profile.sep(np.zeros(100))
        with pytest.raises(StabilityError) as err:
            solve_burgers_entropy(ini, 2.0, 1.0, 0.1, dt=1.0)
        assert err.value.dt_max == pytest.approx(0.45 * 0.01 / 2.0)

    def test_first_order_self_convergence(self):
        # smooth datum, compatible with both wall values, before any shock
        def run(K):
            ini = Profile.sep(cells(K).copy())
            return solve_burgers_entropy(ini, 1.0, 1.0, 0.1, grid=K).final()

        coarse, mid, fine = run(100), run(200), run(400)
        d1 = np.abs(mid.reshape(100, 2).mean(axis=1) - coarse).mean()
        d2 = np.abs(fine.reshape(200, 2).mean(axis=1) - mid).mean()
        rate = np.log2(d1 / d2)
        assert rate >= 0.8


class TestConservationLawEntropy:
    def test_stationary_shock_machine_exact(self):
        K = 200
        ini = Profile.fep(np.where(cells(K) < 0.5, 0.5, 1.0))
        sol = solve_conservation_law_entropy(ini, 1.0, 0.3)
        assert np.array_equal(sol.final(), ini.values)

    def test_image_consistency_with_burgers_shock(self):
        # the code-word stationary shock pulls back to the particle one
        K = 800
        rho0 = Profile.fep(np.where(cells(K) < 0.5, 0.5, 1.0))
        om0, mm = macro_forward(rho0, relaxed=True)
        burg = solve_burgers_entropy(om0, 1.0, mm.m, 0.25)
        mapped = macro_inverse(Profile.sep(np.clip(burg.final(), 0, 1)), mm.m)
        direct = solve_conservation_law_entropy(rho0, 1.0, 0.25)
        assert np.abs(mapped.values - direct.final()).mean() <= 0.02

    def test_godunov_vs_viscosity(self):
        K = 400
        ini = Profile.fep(np.where(cells(K) < 0.5, 1.0, 0.5))
        god = solve_conservation_law_entropy(ini, 1.0, 0.2)
        visc = solve_conservation_law_entropy(ini, 1.0, 0.2, method="viscosity", eps=1e-3)
        assert np.abs(god.final() - visc.final()).mean() <= 0.05

    def test_domain_guard(self):
        with pytest.raises(DomainError):
            solve_conservation_law_entropy(
                Profile(np.full(50, 0.3), 0.0, 1.0), 1.0, 0.1
            )


class TestGridSolution:
    def test_serialization_round_trip(self, tmp_path):
        ini = Profile.sep(np.linspace(0.1, 0.9, 30))
        sol = solve_heat_neumann(ini, 1.0, 1.0, 0.02, save_times=[0.0, 0.01, 0.02])
        mpath, hpath = tmp_path / "sol.txt", tmp_path / "sol.json"
        sol.save(mpath, hpath)
        back = GridSolution.load(mpath, hpath)
        assert back.equation == sol.equation
        assert np.array_equal(back.values, sol.values)
        assert np.array_equal(back.times, sol.times)

    def test_frame_lookup(self):
        ini = Profile.sep(np.full(20, 0.5))
        sol = solve_heat_neumann(ini, 1.0, 1.0, 0.02, save_times=[0.0, 0.02])
        assert np.array_equal(sol.frame(0.0), sol.values[0])
        with pytest.raises(DomainError):
            sol.frame(0.015)
