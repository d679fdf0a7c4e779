"""Configurations on the closed-boundary segment and their empirical measures.

The bulk is the segment {1, ..., N-1}.  Both walls behave like permanently
occupied sites (indices 0 and N); they are never stored, but every rule that
looks past the edge of the occupation vector uses that convention.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import DomainError, EnumerationCapError

ENUMERATION_CAP = 20  # ergodic-state count grows like a Fibonacci number


class Regime(str, Enum):
    """Drift regimes, classified by the asymmetry strength (p, kappa)."""

    SFEP = "sfep"        # symmetric, p = 0
    VWAFEP = "vwafep"    # very weak asymmetry, kappa > 1
    WAFEP = "wafep"      # weak asymmetry, kappa = 1
    AFEPVV = "afepvv"    # asymmetric with vanishing viscosity, kappa < 1


def classify_regime(p: float, kappa: float) -> Regime:
    if p == 0:
        return Regime.SFEP
    if kappa > 1:
        return Regime.VWAFEP
    if kappa == 1:
        return Regime.WAFEP
    return Regime.AFEPVV


@dataclass(frozen=True)
class Params:
    """Rate parameters and the derived acceleration theta = N^((1+kappa) ∧ 2).

    Jump rates already folded with theta, so simulated time is macroscopic:
    right jumps run at (sigma + p N^-kappa) theta, left jumps at sigma theta.
    """

    sigma: float
    p: float
    kappa: float
    N: int

    def __post_init__(self):
        if self.sigma <= 0:
            raise DomainError("sigma must be positive")
        if self.p < 0 or self.kappa < 0:
            raise DomainError("p and kappa must be nonnegative")
        if self.N < 2:
            raise DomainError("lattice scale N must be at least 2")

    @property
    def theta(self) -> float:
        return float(self.N) ** min(1.0 + self.kappa, 2.0)

    @property
    def regime(self) -> Regime:
        return classify_regime(self.p, self.kappa)

    @property
    def rate_right(self) -> float:
        return (self.sigma + self.p * float(self.N) ** (-self.kappa)) * self.theta

    @property
    def rate_left(self) -> float:
        return self.sigma * self.theta


class Configuration:
    """Occupations of the bulk sites 1..N-1, immutable once built.

    The text form is a '0'/'1' string read from site 1 to site N-1.
    """

    __slots__ = ("N", "occupations")

    def __init__(self, N: int, occupations):
        occ = np.ascontiguousarray(occupations, dtype=np.uint8)
        if N < 2:
            raise DomainError("N must be at least 2")
        if occ.ndim != 1 or occ.size != N - 1:
            raise DomainError(f"expected {N - 1} occupation values, got {occ.size}")
        if occ.size and occ.max() > 1:
            raise DomainError("occupations must be 0 or 1")
        occ.flags.writeable = False
        object.__setattr__(self, "N", N)
        object.__setattr__(self, "occupations", occ)

    def __setattr__(self, name, value):
        raise AttributeError("Configuration is immutable")

    def __eq__(self, other):
        return (
            isinstance(other, Configuration)
            and self.N == other.N
            and self.occupations.tobytes() == other.occupations.tobytes()
        )

    def __hash__(self):
        return hash((self.N, self.occupations.tobytes()))

    def __repr__(self):
        return f"Configuration(N={self.N}, '{self.to_string()}')"

    def to_string(self) -> str:
        return "".join("1" if v else "0" for v in self.occupations)

    @classmethod
    def from_string(cls, text: str) -> "Configuration":
        if set(text) - {"0", "1"}:
            raise DomainError("configuration string must contain only 0 and 1")
        return cls(len(text) + 1, np.frombuffer(text.encode(), np.uint8) - ord("0"))

    def reflected(self) -> "Configuration":
        return Configuration(self.N, self.occupations[::-1])


@dataclass(frozen=True)
class EmpiricalDensity:
    """Particle fraction per uniform cell of [0, 1]."""

    K: int
    values: np.ndarray

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float)
        if vals.size != self.K:
            raise DomainError("need one value per cell")
        if vals.size and (vals.min() < 0 or vals.max() > 1):
            raise DomainError("cell densities must lie in [0, 1]")
        object.__setattr__(self, "values", vals)


def is_ergodic(config: Configuration) -> bool:
    """True iff no two adjacent bulk sites are both empty."""
    occ = config.occupations
    if occ.size < 2:
        return True
    return not np.any((occ[:-1] == 0) & (occ[1:] == 0))


def particle_count(config: Configuration) -> int:
    """Number of particles on the bulk (walls excluded)."""
    return int(config.occupations.sum())


def enumerate_ergodic(N: int, k: int | None = None) -> list[Configuration]:
    """All ergodic configurations on {1..N-1}, lexicographic in the occupations.

    Restricted to k particles when k is given.  Exhaustive, hence capped.
    """
    if N > ENUMERATION_CAP:
        raise EnumerationCapError(
            f"enumeration limited to N <= {ENUMERATION_CAP}, got {N}"
        )
    n = N - 1
    codes = np.arange(2**n, dtype=np.int64)
    bits = (codes[:, None] >> np.arange(n - 1, -1, -1)[None, :]) & 1
    bits = bits.astype(np.uint8)
    if n >= 2:
        ok = ~np.any((bits[:, :-1] == 0) & (bits[:, 1:] == 0), axis=1)
    else:
        ok = np.ones(codes.size, dtype=bool)
    if k is not None:
        ok &= bits.sum(axis=1) == k
    return [Configuration(N, row) for row in bits[ok]]


def site_cells(N: int, K: int) -> np.ndarray:
    """Cell index of each bulk site under x -> floor(x K / N)."""
    x = np.arange(1, N, dtype=np.int64)
    return np.minimum(x * K // N, K - 1)


def empirical_density(config: Configuration, K: int) -> EmpiricalDensity:
    """Particle fraction per cell [j/K, (j+1)/K); empty cells report 0.

    Normalised by the number of sites that fall in each cell, so no bias
    appears when K does not divide N.
    """
    if K < 1:
        raise DomainError("K must be at least 1")
    cells = site_cells(config.N, K)
    occupied = np.bincount(cells, weights=config.occupations, minlength=K)
    sites = np.bincount(cells, minlength=K)
    values = np.divide(occupied, sites, out=np.zeros(K), where=sites > 0)
    return EmpiricalDensity(K, values)


def test_function_pairing(config: Configuration, G) -> float:
    """(1/N) sum of G(x/N) over occupied bulk sites x."""
    N = config.N
    x = np.arange(1, N, dtype=float) / N
    g = np.asarray(G(x), dtype=float)
    return float(np.dot(np.broadcast_to(g, (N - 1,)), config.occupations) / N)
