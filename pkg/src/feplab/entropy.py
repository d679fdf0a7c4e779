"""Entropy pairs, boundary pairs, and executable solution checkers.

A Lax pair here is a convex C^2 entropy F together with the companion
Q(r) = int_q^r flux'(s) F'(s) ds.  All built-in entropies have a piecewise
polynomial derivative (a "ramp"), and Q is accumulated piece by piece:
constant ramp tails integrate exactly through the current itself, bounded
polynomial pieces through fixed Gauss--Legendre nodes, exact for the
polynomial current J(w) = w(1-w) and far below rounding for the rational
one h(r) = (1-r)(2r-1)/r.  The compatibility identity Q' = flux' F' holds
identically by construction, and the finite-difference validation only
guards against assembly mistakes.

The residual checkers integrate solver output against smooth test functions
using telescoping quadrature rules: time increments of the test function are
exact, space increments are exact, so stationary fields produce residuals at
rounding level and the checks have first-order consistency otherwise.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numpy.polynomial import polynomial as npp

from .errors import DomainError
from .pde import (
    DIRICHLET_ENTROPY,
    NEUMANN,
    ROBIN,
    SIDE_FEP,
    GridSolution,
    fn_a,
    fn_h,
    fn_J,
    fn_h_prime,
    fn_J_prime,
)

FLUX_DOMAIN = {"J": (0.0, 1.0), "h": (0.5, 1.0)}


def _flux_prime(flux, r):
    return fn_h_prime(r) if flux == "h" else fn_J_prime(r)


# ---------------------------------------------------------------------------
# piecewise integration of weight(t) * P(gamma (t - q))
#
# Constant ramp tails integrate exactly through the current itself; the
# bounded polynomial pieces use 12-point Gauss--Legendre, exact for the
# polynomial current and far below rounding for the rational one, with the
# ramp always evaluated in its own variable z so no large, cancelling
# coefficients ever appear.
# ---------------------------------------------------------------------------

_GL_X, _GL_W = np.polynomial.legendre.leggauss(12)


def _raw_flux(flux, t):
    if flux == "h":
        return (1.0 - t) * (2.0 * t - 1.0) / t
    return t * (1.0 - t)


def _raw_flux_prime(flux, t):
    if flux == "h":
        return 1.0 / t**2 - 2.0
    return 1.0 - 2.0 * t


class EntropyPair:
    """Convex entropy anchored at q with its flux companion.

    The entropy derivative is r -> ramp(gamma (r - q)) with a piecewise
    polynomial ramp: `polys[j]` (ascending coefficients in z) applies between
    `breaks[j-1]` and `breaks[j]`, with open pieces beyond the end breaks.
    Q(r) = int_q^r flux'(t) F'(t) dt is accumulated piece by piece, so the
    companion identity Q' = flux' F' holds identically.
    """

    def __init__(self, flux, q, gamma, breaks, polys, f_at_q=0.0, label=""):
        if flux not in FLUX_DOMAIN:
            raise DomainError(f"unknown flux tag {flux!r}")
        self.flux = flux
        self.q = float(q)
        self.gamma = float(gamma)
        self.label = label or f"pair(flux={flux}, q={q:g})"
        self._f_at_q = float(f_at_q)
        dlo, dhi = FLUX_DOMAIN[flux]
        self.domain = (dlo, dhi)

        zb = [-math.inf] + list(breaks) + [math.inf]
        self._pieces = []  # (t_lo, t_hi, coeffs_z)
        for j, poly_z in enumerate(polys):
            zl, zu = zb[j], zb[j + 1]
            a = dlo if zl == -math.inf else min(max(dlo, q + zl / gamma), dhi)
            b = dhi if zu == math.inf else min(max(dlo, q + zu / gamma), dhi)
            coeffs = np.atleast_1d(np.asarray(poly_z, float))
            self._pieces.append((a, b, coeffs))
        self._t_breaks = np.array([q + z / gamma for z in zb[1:-1]])

    # -- pointwise evaluations ------------------------------------------------

    def _piece_index(self, r):
        return np.searchsorted(self._t_breaks, r, side="right")

    def _eval_ramp(self, r, derivative=False):
        shape = np.shape(r)
        flat = np.atleast_1d(np.asarray(r, float))
        idx = self._piece_index(flat)
        out = np.zeros_like(flat)
        for j, (_, _, coeffs) in enumerate(self._pieces):
            mask = idx == j
            if not np.any(mask):
                continue
            z = self.gamma * (flat[mask] - self.q)
            if derivative:
                out[mask] = self.gamma * npp.polyval(z, npp.polyder(coeffs))
            else:
                out[mask] = npp.polyval(z, coeffs)
        return out.reshape(shape) if shape else float(out[0])

    def F_prime(self, r):
        return self._eval_ramp(r)

    def F_second(self, r):
        return self._eval_ramp(r, derivative=True)

    def _accumulate(self, r, which):
        """int_q^r weight(t) ramp(gamma (t-q)) dt, weight 1 or flux'."""
        shape = np.shape(r)
        flat = np.atleast_1d(np.asarray(r, float)).ravel()
        total = np.zeros_like(flat)
        for a, b, coeffs in self._pieces:
            if a >= b:
                continue
            lo = min(max(self.q, a), b)
            hi = np.clip(flat, a, b)
            if coeffs.size == 1:
                c = coeffs[0]
                if c == 0.0:
                    continue
                if which == "flux":
                    total += c * (_raw_flux(self.flux, hi) - _raw_flux(self.flux, lo))
                else:
                    total += c * (hi - lo)
                continue
            mid = 0.5 * (hi + lo)
            half = 0.5 * (hi - lo)
            t = mid[:, None] + half[:, None] * _GL_X
            vals = npp.polyval(self.gamma * (t - self.q), coeffs)
            if which == "flux":
                vals = vals * _raw_flux_prime(self.flux, t)
            total += half * (vals @ _GL_W)
        return total.reshape(shape) if shape else float(total[0])

    def F(self, r):
        out = self._f_at_q + self._accumulate(r, "one")
        return out if np.ndim(out) else float(out)

    def Q(self, r):
        return self._accumulate(r, "flux")

    def Q_prime(self, r):
        return _flux_prime(self.flux, r) * self.F_prime(r)

    # -- validation -------------------------------------------------------------

    def validate(self, nodes=None, fd_step=1e-5, tol=1e-8):
        """Convexity and the compatibility identity at sample nodes.

        The five-point stencil keeps the truncation error of the
        finite-difference check below `tol` even where F''' is of order
        1/delta^2 for mollified entropies; nodes must stay 2*fd_step inside
        the flux domain.
        """
        dlo, dhi = self.domain
        if nodes is None:
            nodes = np.linspace(dlo + 3 * fd_step, dhi - 3 * fd_step, 101)
            # keep stencils clear of curvature-jump knots, where a crossing
            # five-point formula loses accuracy (the identity itself is exact)
            for tb in self._t_breaks:
                nodes = nodes[np.abs(nodes - tb) > 6 * fd_step]
        nodes = np.asarray(nodes, float)
        if nodes.size == 0:
            raise DomainError("no validation nodes left inside the domain")
        if nodes.min() < dlo + 2 * fd_step or nodes.max() > dhi - 2 * fd_step:
            raise DomainError("validation nodes too close to the domain ends")
        if np.any(self.F_second(nodes) < -tol):
            raise DomainError(f"{self.label}: entropy is not convex")
        h = fd_step
        fd = (
            self.Q(nodes - 2 * h)
            - 8.0 * self.Q(nodes - h)
            + 8.0 * self.Q(nodes + h)
            - self.Q(nodes + 2 * h)
        ) / (12.0 * h)
        err = np.max(np.abs(fd - self.Q_prime(nodes)))
        if err > tol:
            raise DomainError(
                f"{self.label}: companion identity off by {err:.2e} (tol {tol:g})"
            )
        return float(err)


def quadratic_pair(flux: str, c: float) -> EntropyPair:
    """F(r) = (r - c)^2, the simplest smooth convex entropy."""
    return EntropyPair(
        flux, q=c, gamma=1.0, breaks=[], polys=[[0.0, 2.0]],
        f_at_q=0.0, label=f"quadratic(c={c:g}, {flux})",
    )


def kruzhkov_pair(flux: str, q: float, delta: float = 1e-3) -> EntropyPair:
    """Smoothed |r - q|: quartic-spline mollification at scale delta.

    F'(s) ramps from -1 to 1 over [-delta, delta] via the odd cubic
    3s/(2 delta) - s^3/(2 delta^3); C^2, convex, and F = |r - q| outside
    the mollification window.
    """
    if delta <= 0:
        raise DomainError("delta must be positive")
    d = float(delta)
    return EntropyPair(
        flux, q=q, gamma=1.0,
        breaks=[-d, d],
        polys=[[-1.0], [0.0, 1.5 / d, 0.0, -0.5 / d**3], [1.0]],
        f_at_q=3.0 * d / 8.0,
        label=f"kruzhkov(q={q:g}, delta={delta:g}, {flux})",
    )


# boundary ramp: integral of the symmetric hat 4z on [0,1/2], 4(1-z) on [1/2,1];
# F' climbs from 0 to 1, F(z) = z - 1/2 beyond z = 1
_BOUNDARY_BREAKS = [0.0, 0.5, 1.0]
_BOUNDARY_POLYS = [[0.0], [0.0, 0.0, 2.0], [-1.0, 4.0, -2.0], [1.0]]


def _boundary_section(flux: str, q: float, gamma: float) -> EntropyPair:
    return EntropyPair(
        flux, q=q, gamma=gamma,
        breaks=_BOUNDARY_BREAKS, polys=_BOUNDARY_POLYS,
        f_at_q=0.0, label=f"boundary(gamma={gamma:g}, q={q:g}, {flux})",
    )


class BoundaryEntropyPair:
    """Two-argument pair (r, q): a Lax pair in r for every anchor q.

    Construction scales a fixed convex C^2 ramp (zero left tail, unit slope
    beyond 1) by gamma, so F(q,q), the r-derivative at r=q, and Q(q,q) all
    vanish, and as gamma grows the pair converges pointwise to the
    one-sided Kruzhkov pair ((r-q)^+, (flux(r)-flux(q)) 1_{r>=q}).
    """

    def __init__(self, gamma: float, q: float, flux: str):
        if gamma <= 0:
            raise DomainError("gamma must be positive")
        if flux not in FLUX_DOMAIN:
            raise DomainError(f"unknown flux tag {flux!r}")
        dlo, dhi = FLUX_DOMAIN[flux]
        if not dlo <= q <= dhi:
            raise DomainError(f"anchor q={q} outside the {flux} domain")
        self.gamma = float(gamma)
        self.q = float(q)
        self.flux = flux
        self._sections: dict[float, EntropyPair] = {}

    def section(self, q: float | None = None) -> EntropyPair:
        anchor = self.q if q is None else float(q)
        if anchor not in self._sections:
            self._sections[anchor] = _boundary_section(self.flux, anchor, self.gamma)
        return self._sections[anchor]

    def F(self, r, q: float | None = None):
        # int_q^r ramp(gamma (t-q)) dt equals base(gamma (r-q)) / gamma exactly
        return self.section(q).F(r)

    def F_prime(self, r, q: float | None = None):
        return self.section(q).F_prime(r)

    def Q(self, r, q: float | None = None):
        return self.section(q).Q(r)


def make_boundary_pair(gamma: float, q: float, flux: str) -> BoundaryEntropyPair:
    """Boundary pair at scale gamma anchored at q for the given current."""
    pair = BoundaryEntropyPair(gamma, q, flux)
    # anchored values vanish by construction; assert cheaply anyway
    sec = pair.section()
    for value, name in (
        (pair.F(q), "F(q,q)"),
        (sec.F_prime(q), "dF/dr at q"),
        (pair.Q(q), "Q(q,q)"),
    ):
        if abs(float(value)) > 1e-12:
            raise DomainError(f"boundary pair failed {name} = 0")
    return pair


# ---------------------------------------------------------------------------
# test functions
# ---------------------------------------------------------------------------


def _bump(z):
    shape = np.shape(z)
    z = np.atleast_1d(np.asarray(z, float))
    out = np.zeros_like(z)
    inside = np.abs(z) < 1.0
    zi = z[inside]
    with np.errstate(over="ignore", under="ignore"):
        out[inside] = np.exp(1.0 - 1.0 / (1.0 - zi**2))
    return out.reshape(shape) if shape else float(out[0])


def _bump_prime(z):
    shape = np.shape(z)
    z = np.atleast_1d(np.asarray(z, float))
    out = np.zeros_like(z)
    inside = np.abs(z) < 1.0
    zi = z[inside]
    with np.errstate(over="ignore", under="ignore"):
        out[inside] = np.exp(1.0 - 1.0 / (1.0 - zi**2)) * (
            -2.0 * zi / (1.0 - zi**2) ** 2
        )
    return out.reshape(shape) if shape else float(out[0])


@dataclass(frozen=True)
class TestFunction:
    """Smooth product bump phi(t, u), compactly supported in both variables."""

    t_center: float
    t_width: float
    u_center: float
    u_width: float

    @property
    def support(self):
        return (
            self.t_center - self.t_width,
            self.t_center + self.t_width,
            self.u_center - self.u_width,
            self.u_center + self.u_width,
        )

    def value(self, t, u):
        return _bump((np.asarray(t) - self.t_center) / self.t_width) * _bump(
            (np.asarray(u) - self.u_center) / self.u_width
        )

    def dt(self, t, u):
        return (
            _bump_prime((np.asarray(t) - self.t_center) / self.t_width)
            / self.t_width
            * _bump((np.asarray(u) - self.u_center) / self.u_width)
        )

    def du(self, t, u):
        return _bump((np.asarray(t) - self.t_center) / self.t_width) * _bump_prime(
            (np.asarray(u) - self.u_center) / self.u_width
        ) / self.u_width


def random_test_functions(n: int, T: float, seed: int = 0) -> list[TestFunction]:
    """Bumps with supports strictly inside (0,T) x (0,1), moderate widths."""
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(n):
        tw = rng.uniform(0.15, 0.35) * T
        tc = rng.uniform(tw * 1.05, T - tw * 1.05)
        uw = rng.uniform(0.15, 0.3)
        uc = rng.uniform(uw * 1.05, 1 - uw * 1.05)
        out.append(TestFunction(tc, tw, uc, uw))
    return out


@dataclass(frozen=True)
class SpaceTimeFunction:
    """C^{1,2} test function given by closures (value, time and space slopes)."""

    f: object
    f_t: object
    f_u: object

    def value(self, t, u):
        return np.broadcast_to(np.asarray(self.f(t, u), float), np.broadcast_shapes(np.shape(t), np.shape(u))).copy()

    def dt(self, t, u):
        return np.broadcast_to(np.asarray(self.f_t(t, u), float), np.broadcast_shapes(np.shape(t), np.shape(u))).copy()

    def du(self, t, u):
        return np.broadcast_to(np.asarray(self.f_u(t, u), float), np.broadcast_shapes(np.shape(t), np.shape(u))).copy()


# ---------------------------------------------------------------------------
# residual checkers
# ---------------------------------------------------------------------------


def entropy_residual(sol: GridSolution, pair: EntropyPair, phi: TestFunction) -> float:
    """Weak entropy production of a run against one pair and test function.

    Returns int int [F(v) dphi/dt + c Q(v) dphi/du] du dt with c the
    advective coefficient of the run.  Entropy solutions give values
    >= -O(dx + dt); sign violations beyond that expose a non-entropic field.
    """
    T = float(sol.times[-1])
    t_lo, t_hi, u_lo, u_hi = phi.support
    if not (0.0 < t_lo and t_hi < T and 0.0 < u_lo and u_hi < 1.0):
        raise DomainError("test function support must sit inside (0,T) x (0,1)")
    c = float(sol.params["p_eff"])
    centers = sol.centers
    faces = np.arange(sol.K + 1) / sol.K
    times = sol.times
    F_vals = pair.F(sol.values)
    Q_vals = pair.Q(sol.values)

    total = 0.0
    for n in range(times.size - 1):
        t0, t1 = times[n], times[n + 1]
        if t1 <= t_lo or t0 >= t_hi:
            continue
        favg = 0.5 * (F_vals[n] + F_vals[n + 1])
        qavg = 0.5 * (Q_vals[n] + Q_vals[n + 1])
        dphi_time = phi.value(t1, centers) - phi.value(t0, centers)
        total += float(np.dot(favg, dphi_time)) / sol.K
        tm = 0.5 * (t0 + t1)
        phi_faces = phi.value(tm, faces)
        total += c * (t1 - t0) * float(np.dot(qavg, np.diff(phi_faces)))
    return total


def weak_residual(sol: GridSolution, G, t: float) -> float:
    """Defect in the integral (weak) formulation of the zero-flux problems.

    Evaluates initial and terminal pairings, the time-derivative pairing, the
    diffusion term in summed-by-parts face form, the drift term, and the wall
    correction, all with matching telescoping quadratures, so consistent
    solver output satisfies |residual| <= C (dx + dt_save) and constants in
    time cancel to rounding.
    """
    if sol.boundary not in (NEUMANN, ROBIN):
        raise DomainError("weak form applies to zero-flux (Neumann/Robin) runs")
    side = sol.side
    sig = float(sol.params["sigma_eff"])
    p_eff = float(sol.params["p_eff"])
    diff = fn_a if side == SIDE_FEP else (lambda r: np.asarray(r, float))
    adv = fn_h if side == SIDE_FEP else fn_J

    it = int(np.argmin(np.abs(sol.times - t)))
    if abs(sol.times[it] - t) > 1e-9:
        raise DomainError(f"no frame saved at t={t}")
    times = sol.times[: it + 1]
    vals = sol.values[: it + 1]
    K = sol.K
    centers = sol.centers
    faces = np.arange(K + 1) / K

    term_now = float(np.dot(vals[-1], G.value(times[-1], centers))) / K
    term_ini = float(np.dot(vals[0], G.value(times[0], centers))) / K

    term_dt = 0.0
    term_diff = 0.0
    term_adv = 0.0
    term_wall = 0.0
    for n in range(times.size - 1):
        t0, t1 = times[n], times[n + 1]
        dt_n = t1 - t0
        term_dt += float(np.dot(vals[n], G.value(t1, centers) - G.value(t0, centers))) / K
        gu_faces = G.du(t0, faces)
        term_diff += dt_n * float(np.dot(diff(vals[n]), np.diff(gu_faces)))
        g_faces = G.value(t0, faces)
        term_adv += dt_n * float(np.dot(adv(vals[n]), np.diff(g_faces)))
        a_vals = diff(vals[n])
        term_wall += dt_n * (a_vals[-1] * gu_faces[-1] - a_vals[0] * gu_faces[0])

    lhs = term_now - term_ini - term_dt
    rhs = sig * term_diff + p_eff * term_adv - sig * term_wall
    return lhs - rhs


@dataclass
class OttoReport:
    """Boundary-trace diagnostics of an entropy run at one wall."""

    side: str
    boundary_value: float
    gammas: tuple
    times: np.ndarray
    traces: np.ndarray
    integrals: dict
    dichotomy_values: tuple
    dichotomy_ok: np.ndarray

    def signs_ok(self, tol: float = 1e-8) -> bool:
        if self.side == "left":
            return all(v <= tol for v in self.integrals.values())
        return all(v >= -tol for v in self.integrals.values())

    def dichotomy_fraction(self) -> float:
        return float(np.mean(self.dichotomy_ok))


@dataclass(frozen=True)
class TimeBump:
    """Nonnegative compactly supported weight on (0, T)."""

    center: float
    width: float

    def __call__(self, t):
        return _bump((np.asarray(t) - self.center) / self.width)


def check_otto_boundary(
    sol: GridSolution,
    side: str,
    boundary_value: float,
    phi,
    gammas=(10.0, 100.0, 1000.0),
    trace_cells: int = 4,
    dichotomy_tol: float = 0.05,
) -> OttoReport:
    """Trace extraction and signed boundary-pair integrals at one wall.

    The numerical trace averages the `trace_cells` cells nearest the wall
    (traces exist in an L^1 sense only, so pointwise reads need smoothing).
    For each gamma the report carries int phi(t) Q_gamma(trace(t), bc) dt,
    which entropy solutions keep <= 0 at the left wall and >= 0 at the
    right wall, and flags times where the trace leaves the two-point set
    that zero-current boundary values allow.
    """
    if sol.boundary != DIRICHLET_ENTROPY:
        raise DomainError("boundary traces are checked on entropy runs")
    if side not in ("left", "right"):
        raise DomainError("side must be 'left' or 'right'")
    flux = "h" if sol.side == SIDE_FEP else "J"
    ncells = min(trace_cells, sol.K)
    if side == "left":
        traces = sol.values[:, :ncells].mean(axis=1)
    else:
        traces = sol.values[:, -ncells:].mean(axis=1)
    times = sol.times

    weights = np.asarray(phi(times), float)
    if np.any(weights < 0):
        raise DomainError("phi must be nonnegative")
    integrals = {}
    for g in gammas:
        bp = make_boundary_pair(g, boundary_value, flux)
        qvals = bp.Q(traces)
        integrals[float(g)] = float(np.trapezoid(weights * qvals, times))

    lo, hi = (0.5, 1.0) if sol.side == SIDE_FEP else (0.0, 1.0)
    ok = (np.abs(traces - lo) <= dichotomy_tol) | (np.abs(traces - hi) <= dichotomy_tol)
    return OttoReport(
        side=side,
        boundary_value=boundary_value,
        gammas=tuple(float(g) for g in gammas),
        times=times,
        traces=traces,
        integrals=integrals,
        dichotomy_values=(lo, hi),
        dichotomy_ok=ok,
    )


def builtin_pairs(flux: str) -> list[EntropyPair]:
    """The residual-test battery for one current: quadratic and Kruzhkov pairs."""
    dlo, dhi = FLUX_DOMAIN[flux]
    span = dhi - dlo
    anchors = [dlo + f * span for f in (0.25, 0.5, 0.75)]
    pairs = [quadratic_pair(flux, c) for c in anchors]
    pairs += [kruzhkov_pair(flux, q) for q in anchors]
    return pairs
