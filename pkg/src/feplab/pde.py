"""Finite-volume solvers for the six limit equations.

Everything runs on K uniform cells of [0,1] with explicit Euler stepping
under enforced stability bounds.  Diffusion is discretised in flux form,
face flux = coeff * (A(v_{i+1}) - A(v_i)) / dx with A the (possibly
nonlinear) diffusion transform, so zero-flux walls conserve mass exactly in
scheme arithmetic.  Advective face fluxes use the exact Riemann (Godunov)
value for the concave flux at hand; Dirichlet data enter through ghost
cells pinned to the boundary values, which realises the vanishing-viscosity
boundary conditions and is checked a posteriori by the entropy module.

Side conventions: side 0 is the code-word frame (identity diffusion, current
J(w) = w(1-w), values in [0,1]); side 1 is the particle frame (diffusion
through a(r) = (2r-1)/r, current h(r) = (1-r)(2r-1)/r, values in [1/2,1]).
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np
from numba import njit

from .errors import DomainError, SchemeFailureError, StabilityError
from .mapping import Profile

SIDE_SEP = 0
SIDE_FEP = 1

NEUMANN = "neumann"
ROBIN = "robin"
DIRICHLET_ENTROPY = "dirichlet-entropy"

SQRT_HALF = np.sqrt(0.5)  # critical point of h
A_SLOPE_MAX = 4.0         # a'(1/2)
H_LIP = 2.0               # max |h'| on [1/2, 1], attained at 1/2
J_LIP = 1.0               # max |J'| on [0, 1]

REGION = {SIDE_SEP: (0.0, 1.0), SIDE_FEP: (0.5, 1.0)}
OVERSHOOT_TOL = 1e-10


# ---------------------------------------------------------------------------
# constitutive functions (checked, vectorised) and their derivatives
# ---------------------------------------------------------------------------


def _check_range(r, lo, hi, name):
    arr = np.asarray(r, dtype=float)
    if arr.size and (arr.min() < lo - 1e-12 or arr.max() > hi + 1e-12):
        raise DomainError(f"{name} expects arguments in [{lo}, {hi}]")
    return arr


def fn_a(r):
    """Diffusion transform (2r-1)/r on [1/2, 1]."""
    arr = _check_range(r, 0.5, 1.0, "fn_a")
    return (2.0 * arr - 1.0) / arr


def fn_a_prime(r):
    arr = _check_range(r, 0.5, 1.0, "fn_a_prime")
    return 1.0 / arr**2


def fn_h(r):
    """Particle-frame current (1-r)(2r-1)/r on [1/2, 1]."""
    arr = _check_range(r, 0.5, 1.0, "fn_h")
    return (1.0 - arr) * (2.0 * arr - 1.0) / arr


def fn_h_prime(r):
    arr = _check_range(r, 0.5, 1.0, "fn_h_prime")
    return 1.0 / arr**2 - 2.0


def fn_J(w):
    """Code-word-frame current w(1-w) on [0, 1]."""
    arr = _check_range(w, 0.0, 1.0, "fn_J")
    return arr * (1.0 - arr)


def fn_J_prime(w):
    arr = _check_range(w, 0.0, 1.0, "fn_J_prime")
    return 1.0 - 2.0 * arr


# ---------------------------------------------------------------------------
# compiled stepping cores
# ---------------------------------------------------------------------------


@njit(cache=True, inline="always")
def _flux_of(r, side):
    if side == SIDE_FEP:
        return (1.0 - r) * (2.0 * r - 1.0) / r
    return r * (1.0 - r)


@njit(cache=True, inline="always")
def _diff_of(r, side):
    if side == SIDE_FEP:
        return (2.0 * r - 1.0) / r
    return r


@njit(cache=True, inline="always")
def _godunov(a, b, side):
    # exact Riemann flux for a concave current: endpoint minimum when the
    # states are ordered upward, otherwise the maximum over [b, a], which
    # sits at the critical point when straddled
    fa = _flux_of(a, side)
    fb = _flux_of(b, side)
    if a <= b:
        return fa if fa < fb else fb
    rc = SQRT_HALF if side == SIDE_FEP else 0.5
    if b <= rc <= a:
        return _flux_of(rc, side)
    return fa if fa > fb else fb


@njit(cache=True)
def _advance_parabolic(v, nsteps, dt, dx, sig_eff, p_eff, side, flux):
    """Zero-total-flux update: flux = p_eff*godunov - sig_eff*dA/dx, walls 0."""
    K = v.size
    for _ in range(nsteps):
        for i in range(K + 1):
            if i == 0 or i == K:
                flux[i] = 0.0
            else:
                f = -sig_eff * (_diff_of(v[i], side) - _diff_of(v[i - 1], side)) / dx
                if p_eff != 0.0:
                    f += p_eff * _godunov(v[i - 1], v[i], side)
                flux[i] = f
        for i in range(K):
            v[i] -= dt / dx * (flux[i + 1] - flux[i])


@njit(cache=True)
def _advance_entropy(v, nsteps, dt, dx, c_adv, eps_eff, side, bc_l, bc_r, flux):
    """Godunov update with ghost cells pinned to the boundary data.

    eps_eff > 0 adds the parabolic perturbation through the side's
    diffusion transform, ghost cells included.
    """
    K = v.size
    for _ in range(nsteps):
        for i in range(K + 1):
            left = bc_l if i == 0 else v[i - 1]
            right = bc_r if i == K else v[i]
            f = c_adv * _godunov(left, right, side)
            if eps_eff != 0.0:
                f -= eps_eff * (_diff_of(right, side) - _diff_of(left, side)) / dx
            flux[i] = f
        for i in range(K):
            v[i] -= dt / dx * (flux[i + 1] - flux[i])


# ---------------------------------------------------------------------------
# solution container
# ---------------------------------------------------------------------------


@dataclass
class GridSolution:
    """Space-time values of one run plus the metadata needed to check it."""

    equation: str
    boundary: str
    times: np.ndarray
    values: np.ndarray  # (n_times, K)
    params: dict

    @property
    def K(self) -> int:
        return self.values.shape[1]

    @property
    def centers(self) -> np.ndarray:
        return (np.arange(self.K) + 0.5) / self.K

    @property
    def side(self) -> int:
        return int(self.params["side"])

    def frame(self, t: float) -> np.ndarray:
        i = int(np.argmin(np.abs(self.times - t)))
        if abs(self.times[i] - t) > 1e-9:
            raise DomainError(f"no frame saved at t={t}")
        return self.values[i]

    def final(self) -> np.ndarray:
        return self.values[-1]

    def mass(self) -> np.ndarray:
        return self.values.mean(axis=1)

    def save(self, matrix_path, header_path):
        np.savetxt(matrix_path, self.values, fmt="%.17g")
        header = {
            "equation": self.equation,
            "boundary": self.boundary,
            "cells": self.K,
            "times": [float(t) for t in self.times],
            "params": {k: v for k, v in self.params.items()},
        }
        with open(header_path, "w") as fh:
            json.dump(header, fh, indent=2, sort_keys=True)
            fh.write("\n")

    @classmethod
    def load(cls, matrix_path, header_path) -> "GridSolution":
        with open(header_path) as fh:
            header = json.load(fh)
        values = np.loadtxt(matrix_path, ndmin=2)
        return cls(
            equation=header["equation"],
            boundary=header["boundary"],
            times=np.asarray(header["times"], float),
            values=values,
            params=header["params"],
        )


# ---------------------------------------------------------------------------
# drivers
# ---------------------------------------------------------------------------


def _check_positive(**named):
    for name, value in named.items():
        if value <= 0:
            raise DomainError(f"{name} must be positive, got {value!r}")


def _resample(profile: Profile, K: int | None) -> np.ndarray:
    if K is None or K == profile.K:
        return profile.values.copy()
    centers = (np.arange(K) + 0.5) / K
    return np.asarray(profile(centers), dtype=float).copy()


def _save_schedule(T: float, save_times) -> np.ndarray:
    if save_times is None:
        times = np.array([0.0, T]) if T > 0 else np.array([0.0])
    else:
        times = np.asarray(sorted(set(float(t) for t in save_times)), float)
    if times.size == 0 or times.min() < 0 or times.max() > T + 1e-12:
        raise DomainError("save times must lie in [0, T]")
    return times


def _check_dt(dt: float | None, dt_max: float) -> float:
    if dt is None:
        return dt_max
    if dt > dt_max * (1 + 1e-12) or dt <= 0:
        raise StabilityError(dt, dt_max)
    return dt


def _check_region(values: np.ndarray, side: int, equation: str):
    lo, hi = REGION[side]
    if values.min() < lo - OVERSHOOT_TOL or values.max() > hi + OVERSHOOT_TOL:
        raise SchemeFailureError(
            f"{equation}: values left [{lo}, {hi}] beyond the {OVERSHOOT_TOL} overshoot"
        )


def _run(values, advance, args, dt, save_times, side, equation):
    flux = np.empty(values.size + 1)
    frames = np.empty((save_times.size, values.size))
    t = 0.0
    for s, target in enumerate(save_times):
        span = target - t
        if span > 0:
            nfull = int(np.floor(span / dt + 1e-12))
            rem = span - nfull * dt
            if nfull:
                advance(values, nfull, dt, *args, flux)
            if rem > dt * 1e-9:
                advance(values, 1, rem, *args, flux)
            t = target
        frames[s] = values
        _check_region(values, side, equation)
    return frames


def solve_heat_neumann(
    omega_ini: Profile, sigma: float, m: float, T: float,
    grid: int | None = None, dt: float | None = None, save_times=None,
) -> GridSolution:
    """d/dt w = (sigma/m^2) d^2/dv^2 w with zero-gradient walls."""
    _check_positive(sigma=sigma, m=m)
    v = _resample(omega_ini, grid)
    K = v.size
    dx = 1.0 / K
    sig_eff = sigma / m**2
    dt = _check_dt(dt, 0.45 * dx**2 / sig_eff)
    times = _save_schedule(T, save_times)
    frames = _run(
        v, _advance_parabolic, (dx, sig_eff, 0.0, SIDE_SEP), dt, times,
        SIDE_SEP, "heat-neumann",
    )
    return GridSolution(
        "heat-neumann", NEUMANN, times, frames,
        {"sigma": sigma, "p": 0.0, "m": m, "side": SIDE_SEP,
         "sigma_eff": sig_eff, "p_eff": 0.0, "dt": dt},
    )


def solve_fast_diffusion_neumann(
    rho_ini: Profile, sigma: float, T: float,
    grid: int | None = None, dt: float | None = None, save_times=None,
) -> GridSolution:
    """d/dt r = sigma d^2/du^2 a(r) with zero-flux walls, values in [1/2, 1]."""
    _check_positive(sigma=sigma)
    v = _resample(rho_ini, grid)
    if v.min() < 0.5:
        raise DomainError("initial density must take values in [1/2, 1]")
    K = v.size
    dx = 1.0 / K
    dt = _check_dt(dt, 0.45 * dx**2 / (sigma * A_SLOPE_MAX))
    times = _save_schedule(T, save_times)
    frames = _run(
        v, _advance_parabolic, (dx, sigma, 0.0, SIDE_FEP), dt, times,
        SIDE_FEP, "fast-diffusion-neumann",
    )
    return GridSolution(
        "fast-diffusion-neumann", NEUMANN, times, frames,
        {"sigma": sigma, "p": 0.0, "m": 1.0, "side": SIDE_FEP,
         "sigma_eff": sigma, "p_eff": 0.0, "dt": dt},
    )


def solve_viscous_burgers_robin(
    omega_ini: Profile, sigma: float, p: float, m: float, T: float,
    grid: int | None = None, dt: float | None = None, save_times=None,
) -> GridSolution:
    """d/dt w = (sigma/m^2) d^2 w - (p/m) d J(w), total flux pinned to 0 at walls."""
    _check_positive(sigma=sigma, m=m)
    if p < 0:
        raise DomainError("p must be nonnegative")
    v = _resample(omega_ini, grid)
    K = v.size
    dx = 1.0 / K
    sig_eff = sigma / m**2
    p_eff = p / m
    dt = _check_dt(dt, 0.45 / (sig_eff / dx**2 + p_eff * J_LIP / dx))
    times = _save_schedule(T, save_times)
    frames = _run(
        v, _advance_parabolic, (dx, sig_eff, p_eff, SIDE_SEP), dt, times,
        SIDE_SEP, "viscous-burgers-robin",
    )
    return GridSolution(
        "viscous-burgers-robin", ROBIN, times, frames,
        {"sigma": sigma, "p": p, "m": m, "side": SIDE_SEP,
         "sigma_eff": sig_eff, "p_eff": p_eff, "dt": dt},
    )


def solve_convection_diffusion_robin(
    rho_ini: Profile, sigma: float, p: float, T: float,
    grid: int | None = None, dt: float | None = None, save_times=None,
) -> GridSolution:
    """d/dt r = sigma d^2 a(r) - p d h(r), total flux pinned to 0 at walls."""
    _check_positive(sigma=sigma)
    if p < 0:
        raise DomainError("p must be nonnegative")
    v = _resample(rho_ini, grid)
    if v.min() < 0.5:
        raise DomainError("initial density must take values in [1/2, 1]")
    K = v.size
    dx = 1.0 / K
    dt = _check_dt(dt, 0.45 / (sigma * A_SLOPE_MAX / dx**2 + p * H_LIP / dx))
    times = _save_schedule(T, save_times)
    frames = _run(
        v, _advance_parabolic, (dx, sigma, p, SIDE_FEP), dt, times,
        SIDE_FEP, "convection-diffusion-robin",
    )
    return GridSolution(
        "convection-diffusion-robin", ROBIN, times, frames,
        {"sigma": sigma, "p": p, "m": 1.0, "side": SIDE_FEP,
         "sigma_eff": sigma, "p_eff": p, "dt": dt},
    )


def _solve_entropy(
    ini, side, c_adv, bc_l, bc_r, T, grid, dt, save_times, method, eps, equation, m,
    raw,
):
    v = _resample(ini, grid)
    K = v.size
    dx = 1.0 / K
    lip = H_LIP if side == SIDE_FEP else J_LIP
    if method == "godunov":
        eps_eff = 0.0
        dt_max = 0.45 * dx / (c_adv * lip) if c_adv > 0 else max(T, 1.0)
    elif method == "viscosity":
        if eps <= 0:
            raise DomainError("viscosity method needs eps > 0")
        eps_eff = eps / m**2 if side == SIDE_SEP else eps
        dslope = 1.0 if side == SIDE_SEP else A_SLOPE_MAX
        dt_max = 0.45 / (eps_eff * dslope / dx**2 + c_adv * lip / dx)
    else:
        raise DomainError(f"unknown method {method!r}")
    dt = _check_dt(dt, dt_max)
    times = _save_schedule(T, save_times)
    frames = _run(
        v, _advance_entropy, (dx, c_adv, eps_eff, side, bc_l, bc_r), dt, times,
        side, equation,
    )
    params = dict(raw)
    params.update(
        {"side": side, "p_eff": c_adv, "sigma_eff": eps_eff, "dt": dt,
         "bc_left": bc_l, "bc_right": bc_r, "method": method, "eps": eps}
    )
    return GridSolution(equation, DIRICHLET_ENTROPY, times, frames, params)


def solve_burgers_entropy(
    omega_ini: Profile, p: float, m: float, T: float,
    grid: int | None = None, dt: float | None = None, save_times=None,
    method: str = "godunov", eps: float = 0.0,
) -> GridSolution:
    """d/dt w + (p/m) d J(w) = 0 with boundary data w(0)=0, w(1)=1.

    method="viscosity" solves the parabolic perturbation with an
    (eps/m^2) d^2 w right-hand side instead.
    """
    return _solve_entropy(
        omega_ini, SIDE_SEP, p / m, 0.0, 1.0, T, grid, dt, save_times,
        method, eps, "burgers-dirichlet", m, {"sigma": 0.0, "p": p, "m": m},
    )


def solve_conservation_law_entropy(
    rho_ini: Profile, p: float, T: float,
    grid: int | None = None, dt: float | None = None, save_times=None,
    method: str = "godunov", eps: float = 0.0,
) -> GridSolution:
    """d/dt r + p d h(r) = 0 with boundary data r(0)=1/2, r(1)=1.

    method="viscosity" adds the perturbation eps d^2 a(r), keeping the same
    pinned boundary values.
    """
    vals = np.asarray(rho_ini.values, float)
    if vals.min() < 0.5:
        raise DomainError("initial density must take values in [1/2, 1]")
    return _solve_entropy(
        rho_ini, SIDE_FEP, p, 0.5, 1.0, T, grid, dt, save_times,
        method, eps, "conservation-law-dirichlet", 1.0, {"sigma": 0.0, "p": p, "m": 1.0},
    )


EQUATION_SOLVERS = {
    "heat-neumann": solve_heat_neumann,
    "fast-diffusion-neumann": solve_fast_diffusion_neumann,
    "viscous-burgers-robin": solve_viscous_burgers_robin,
    "convection-diffusion-robin": solve_convection_diffusion_robin,
    "burgers-dirichlet": solve_burgers_entropy,
    "conservation-law-dirichlet": solve_conservation_law_entropy,
}
