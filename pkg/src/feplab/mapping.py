"""Recoding between facilitated and simple exclusion, micro and macro.

Microscopic level: an ergodic configuration with k particles on {1..N-1} is
encoded, particle by particle (walls included on the left), by whether the
site to the particle's right is occupied.  The code word is a simple
exclusion configuration on {1..M-1} with M = k+2 and 2k-N+2 particles, and
the encoding is a bijection.

Macroscopic level: the same bookkeeping applied to density profiles.  A
profile rho on [0,1] with values in [1/2, 1] is carried to
omega(v) = (2 rho - 1)/rho evaluated along the rescaled cumulative-mass
coordinate, and back via rho(u) = 1/(2 - omega(v(u))).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainError, MassConsistencyError, ShapeMismatchError
from .lattice import Configuration, EmpiricalDensity, is_ergodic, site_cells


class SepConfiguration:
    """Occupations of a simple-exclusion state on the bulk sites 1..M-1."""

    __slots__ = ("M", "occupations")

    def __init__(self, M: int, occupations):
        occ = np.ascontiguousarray(occupations, dtype=np.uint8)
        if M < 2:
            raise DomainError("M must be at least 2")
        if occ.ndim != 1 or occ.size != M - 1:
            raise DomainError(f"expected {M - 1} occupation values, got {occ.size}")
        if occ.size and occ.max() > 1:
            raise DomainError("occupations must be 0 or 1")
        occ.flags.writeable = False
        object.__setattr__(self, "M", M)
        object.__setattr__(self, "occupations", occ)

    def __setattr__(self, name, value):
        raise AttributeError("SepConfiguration is immutable")

    def __eq__(self, other):
        return (
            isinstance(other, SepConfiguration)
            and self.M == other.M
            and self.occupations.tobytes() == other.occupations.tobytes()
        )

    def __hash__(self):
        return hash((self.M, self.occupations.tobytes()))

    def __repr__(self):
        return f"SepConfiguration(M={self.M}, '{self.to_string()}')"

    def to_string(self) -> str:
        return "".join("1" if v else "0" for v in self.occupations)

    def particle_count(self) -> int:
        return int(self.occupations.sum())


FEP_RANGE = (0.5, 1.0)
SEP_RANGE = (0.0, 1.0)


@dataclass(frozen=True)
class Profile:
    """Piecewise-constant density on K uniform cells of [0, 1].

    `low`/`high` declare the admissible range: [1/2, 1] for particle-density
    profiles, [0, 1] for code-word densities.  Values are checked exactly at
    construction.
    """

    values: np.ndarray
    low: float = 0.0
    high: float = 1.0

    def __post_init__(self):
        vals = np.ascontiguousarray(self.values, dtype=float)
        if vals.ndim != 1 or vals.size == 0:
            raise DomainError("profile needs a 1-d, nonempty value array")
        if vals.min() < self.low or vals.max() > self.high:
            raise DomainError(
                f"profile values must lie in [{self.low}, {self.high}]"
            )
        vals.flags.writeable = False
        object.__setattr__(self, "values", vals)

    @property
    def K(self) -> int:
        return self.values.size

    @property
    def centers(self) -> np.ndarray:
        return (np.arange(self.K) + 0.5) / self.K

    def __call__(self, u) -> np.ndarray:
        """Cell value containing u (piecewise-constant lookup)."""
        idx = np.minimum((np.asarray(u) * self.K).astype(np.int64), self.K - 1)
        return self.values[np.maximum(idx, 0)]

    def mass(self) -> float:
        return float(self.values.mean())

    @classmethod
    def fep(cls, values) -> "Profile":
        return cls(values, *FEP_RANGE)

    @classmethod
    def sep(cls, values) -> "Profile":
        return cls(values, *SEP_RANGE)

    def save(self, path):
        data = np.column_stack([self.centers, self.values])
        np.savetxt(path, data, fmt="%.17g", header="center value")

    @classmethod
    def load(cls, path, low=0.0, high=1.0) -> "Profile":
        data = np.loadtxt(path, ndmin=2)
        return cls(data[:, 1], low, high)


@dataclass(frozen=True)
class MassMap:
    """Monotone change of coordinates between the two macroscopic frames.

    `v_nodes[j]` is the rescaled cumulative mass at u = j/K; `omega_cells[j]`
    is the code-word density on the image interval (v_nodes[j], v_nodes[j+1]).
    Integrals of piecewise-constant data against this native grid close the
    identity m * int(2 - omega) dv = 1 to rounding error.
    """

    m: float
    v_nodes: np.ndarray
    omega_cells: np.ndarray

    @property
    def u_nodes(self) -> np.ndarray:
        return np.arange(self.v_nodes.size) / (self.v_nodes.size - 1)

    def v_of_u(self, u) -> np.ndarray:
        return np.interp(u, self.u_nodes, self.v_nodes)

    def u_of_v(self, v) -> np.ndarray:
        return np.interp(v, self.v_nodes, self.u_nodes)

    def mass_identity_residual(self) -> float:
        dv = np.diff(self.v_nodes)
        return float(abs(self.m * np.dot(dv, 2.0 - self.omega_cells) - 1.0))

    def save(self, path):
        omega_at_nodes = np.append(self.omega_cells, self.omega_cells[-1])
        data = np.column_stack([self.u_nodes, self.v_nodes, omega_at_nodes])
        np.savetxt(path, data, fmt="%.17g", header="u v omega(v)")


def phi(config: Configuration) -> SepConfiguration:
    """Encode an ergodic configuration as a simple-exclusion code word.

    Particles on {0, ..., N-1} (the left wall included) are numbered left to
    right; code site y carries a particle iff particle y has an occupied
    right neighbour, the right wall counting as occupied.
    """
    if not is_ergodic(config):
        raise DomainError("encoding is defined on ergodic configurations only")
    occ = config.occupations
    n = occ.size  # = N - 1
    # occ_ext[s] = occupancy of site s+1, with the right wall appended
    occ_ext = np.empty(n + 1, np.uint8)
    occ_ext[:n] = occ
    occ_ext[n] = 1
    sites = np.concatenate(([0], np.flatnonzero(occ) + 1))
    xi = occ_ext[sites]
    return SepConfiguration(sites.size + 1, xi)


def phi_inverse(sep: SepConfiguration, N: int) -> Configuration:
    """Decode a code word: each hole expands to 'particle, hole'.

    The (M, particle count) shape must match N: the code's k = M-2 particles
    must satisfy count = 2k - N + 2.
    """
    xi = sep.occupations
    M = sep.M
    k = M - 2
    ell = int(xi.sum())
    if ell != 2 * k - N + 2:
        raise ShapeMismatchError(
            f"code word with M={M}, {ell} particles matches no state on N={N}"
        )
    positions = np.concatenate(([0], np.cumsum(2 - xi.astype(np.int64))[:-1]))
    occ = np.zeros(N - 1, np.uint8)
    occ[positions[1:] - 1] = 1
    return Configuration(N, occ)


def gamma(sep: SepConfiguration, y: int) -> int:
    """Bulk position of the particle that produced code site y (y >= 2).

    Equals the number of particles plus twice the number of holes among the
    first y-1 code sites.
    """
    if y < 2 or y > sep.M - 1:
        raise DomainError(f"site index must lie in [2, {sep.M - 1}], got {y}")
    xi = sep.occupations[: y - 1].astype(np.int64)
    return int(np.sum(2 - xi))


def gamma_all(sep: SepConfiguration) -> np.ndarray:
    """Positions gamma(y) for y = 2..M-1 in one pass."""
    xi = sep.occupations.astype(np.int64)
    return np.cumsum(2 - xi)[:-1]


def _cell_average(nodes: np.ndarray, vals: np.ndarray, K_out: int) -> np.ndarray:
    """Exact averages of a piecewise-constant function onto K_out uniform cells.

    The cumulative integral of piecewise-constant data is piecewise linear
    with knots at `nodes`, so linear interpolation evaluates it exactly and
    the averaging preserves the total integral to rounding error.
    """
    cum = np.concatenate(([0.0], np.cumsum(np.diff(nodes) * vals)))
    edges = np.arange(K_out + 1) / K_out
    return np.diff(np.interp(edges, nodes, cum)) * K_out


def macro_forward(
    rho: Profile, out_cells: int | None = None, relaxed: bool = False
) -> tuple[Profile, MassMap]:
    """Lift the particle-density profile to the code-word density.

    The cumulative-mass coordinate is built by the midpoint rule on the
    profile's own grid (exact for piecewise-constant data) and inverted by
    monotone linear interpolation; omega is returned as exact cell averages
    on the output grid, so its integral matches the native image grid to
    rounding error.  Values must exceed 1/2 strictly unless `relaxed`,
    which admits the closed endpoint (omega then touches 0; the map stays
    invertible).
    """
    vals = rho.values
    K = vals.size
    lo = vals.min()
    if lo < 0.5 or (not relaxed and lo <= 0.5):
        raise DomainError(
            "density profile must take values in (1/2, 1]"
            + (" (or [1/2, 1] with relaxed=True)" if not relaxed else "")
        )
    if vals.max() > 1.0:
        raise DomainError("density profile must take values in (1/2, 1]")
    m = float(vals.mean())
    v_nodes = np.concatenate(([0.0], np.cumsum(vals) / (K * m)))
    v_nodes[-1] = 1.0
    omega_cells = (2.0 * vals - 1.0) / vals
    mm = MassMap(m=m, v_nodes=v_nodes, omega_cells=omega_cells)

    Kout = out_cells or K
    omega = Profile.sep(np.clip(_cell_average(v_nodes, omega_cells, Kout), 0.0, 1.0))
    return omega, mm


def macro_inverse(
    omega: Profile, m: float, out_cells: int | None = None, mass_tol: float = 1e-6
) -> Profile:
    """Pull the code-word density back to a particle-density profile.

    Requires the mass identity m * int(2 - omega) dv = 1 within `mass_tol`;
    the identity is forced whenever (omega, m) actually come from a density
    profile, so a violation means inconsistent inputs.
    """
    w = omega.values
    K = w.size
    residual = abs(m * float(np.mean(2.0 - w)) - 1.0)
    if residual > mass_tol:
        raise MassConsistencyError(
            f"mass identity violated by {residual:.3e} (tolerance {mass_tol:g})"
        )
    u_nodes = m * np.concatenate(([0.0], np.cumsum(2.0 - w) / K))
    u_nodes[-1] = 1.0
    rho_cells = 1.0 / (2.0 - w)
    Kout = out_cells or K
    rho_vals = _cell_average(u_nodes, rho_cells, Kout)
    return Profile.fep(np.clip(rho_vals, 0.5, 1.0))


def sep_empirical_density(sep: SepConfiguration, K: int) -> EmpiricalDensity:
    """Particle fraction of a code word per cell [j/K, (j+1)/K) of [0, 1]."""
    if K < 1:
        raise DomainError("K must be at least 1")
    cells = site_cells(sep.M, K)
    occupied = np.bincount(cells, weights=sep.occupations, minlength=K)
    sites = np.bincount(cells, minlength=K)
    values = np.divide(occupied, sites, out=np.zeros(K), where=sites > 0)
    return EmpiricalDensity(K, values)


def empirical_push_forward(config: Configuration, K: int) -> EmpiricalDensity:
    """Empirical density of the encoded configuration on K cells of [0, 1]."""
    return sep_empirical_density(phi(config), K)
