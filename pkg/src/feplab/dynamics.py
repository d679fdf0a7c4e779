"""Exact event-driven simulation of both exclusion dynamics.

Facilitated jumps on the segment: a particle at x moves right at rate
(sigma + p N^-kappa) theta when site x-1 is occupied and x+1 is free, and
moves left at rate sigma theta when x+1 is occupied and x-1 is free, the
walls counting as occupied facilitators.  Code-word (simple exclusion)
jumps drop the facilitation factor but keep the same two rates, still
scaled with the originating lattice's N.

Two interchangeable engines sample the same jump chain:

* a two-class active-move list with O(1) updates drives the bulk
  trajectory runs (`fep_simulate`, `sep_simulate`, `*_replicas`);
* the cumulative `RateTable` (binary indexed tree, O(log N) sampling and
  updates) backs the single-step API `fep_step` and exposes per-move rates
  for inspection.

Both draw from the same counter-based streams, so each API is individually
reproducible bit for bit.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from . import _kernels as K
from .errors import DomainError, EnumerationCapError
from .lattice import Configuration, Params, enumerate_ergodic, is_ergodic
from .mapping import SepConfiguration, phi

REBUILD_EVERY = 1 << 20  # events between cumulative-table rebuilds


class RandomStream:
    """Counter-based stream; state advances only through draws."""

    __slots__ = ("state",)

    def __init__(self, seed: int, replica: int = 0):
        self.state = K.seed_state(seed, replica)


def _padded(occ: np.ndarray, kind: int) -> np.ndarray:
    n = occ.size
    ob = np.zeros(n + 2, np.uint8)
    if kind == K.FEP:
        ob[0] = 1
        ob[n + 1] = 1
    ob[1 : n + 1] = occ
    return ob


class RateTable:
    """Per-(bond, direction) jump rates with a cumulative index.

    Leaf 2(x-1) holds the right-jump rate of bond x, leaf 2(x-1)+1 the
    left-jump rate.  The running total is maintained incrementally and the
    tree is rebuilt every REBUILD_EVERY events to keep the relative drift
    under 1e-9.
    """

    def __init__(self, config: Configuration | SepConfiguration, params: Params):
        if isinstance(config, SepConfiguration):
            self.kind = K.SEP
            nsites = config.M - 1
        else:
            self.kind = K.FEP
            nsites = config.N - 1
        self.params = params
        self.rate_right = params.rate_right
        self.rate_left = params.rate_left
        self.nbonds = max(nsites - 1, 0)
        self._ob = _padded(config.occupations, self.kind)
        self.leaf = np.zeros(2 * self.nbonds, np.float64)
        if self.nbonds:
            K.fill_leaf_rates(
                self._ob, self.kind, self.rate_right, self.rate_left, self.leaf
            )
        self.tree = K.fenwick_init(self.leaf)
        self._events_since_rebuild = 0

    @property
    def total_rate(self) -> float:
        if not self.nbonds:
            return 0.0
        return float(K.fenwick_total(self.tree))

    def rate(self, bond: int, direction: str) -> float:
        if not 1 <= bond <= self.nbonds:
            raise DomainError(f"bond must lie in [1, {self.nbonds}]")
        d = 0 if direction == "right" else 1
        return float(self.leaf[2 * (bond - 1) + d])

    def enabled_moves(self) -> list[tuple[int, str]]:
        out = []
        for b in range(1, self.nbonds + 1):
            if self.leaf[2 * (b - 1)] > 0:
                out.append((b, "right"))
            if self.leaf[2 * (b - 1) + 1] > 0:
                out.append((b, "left"))
        return out

    def rebuild(self):
        K.fill_leaf_rates(
            self._ob, self.kind, self.rate_right, self.rate_left, self.leaf
        )
        self.tree = K.fenwick_init(self.leaf)
        self._events_since_rebuild = 0


def fep_step(
    state: Configuration, rates: RateTable, rng: RandomStream
) -> tuple[Configuration, float]:
    """One exact jump; returns the new state and the elapsed macroscopic time.

    The rate table must have been built from `state`; it is advanced in
    place together with the stream.  An absorbing state returns the input
    unchanged with elapsed time +inf.
    """
    if rates.kind != K.FEP or not np.array_equal(
        rates._ob[1:-1], state.occupations
    ):
        raise DomainError("rate table is out of sync with the configuration")
    _, dt, bond, _ = _table_step(rates, rng)
    if bond < 0:
        return state, dt
    return Configuration(state.N, rates._ob[1:-1].copy()), dt


def sep_step(
    state: SepConfiguration, rates: RateTable, rng: RandomStream
) -> tuple[SepConfiguration, float]:
    """Code-word analogue of `fep_step`."""
    if rates.kind != K.SEP or not np.array_equal(
        rates._ob[1:-1], state.occupations
    ):
        raise DomainError("rate table is out of sync with the configuration")
    _, dt, bond, _ = _table_step(rates, rng)
    if bond < 0:
        return state, dt
    return SepConfiguration(state.M, rates._ob[1:-1].copy()), dt


def _table_step(rates: RateTable, rng: RandomStream):
    if not rates.nbonds:
        return rng.state, np.inf, -1, -1
    state, dt, bond, direction = K.table_step(
        rates._ob,
        rates.kind,
        rates.rate_right,
        rates.rate_left,
        rates.leaf,
        rates.tree,
        np.uint64(rng.state),
    )
    rng.state = np.uint64(state)
    if bond >= 0:
        rates._events_since_rebuild += 1
        if rates._events_since_rebuild >= REBUILD_EVERY:
            rates.rebuild()
    return state, dt, bond, direction


@dataclass(frozen=True)
class Trajectory:
    """Snapshots of one run at the requested macroscopic times."""

    side: str  # "fep" or "sep"
    times: np.ndarray
    occupations: np.ndarray  # (n_times, n_sites) uint8
    seed: int
    params: Params
    n_events: int
    absorbed: bool

    @property
    def n_sites(self) -> int:
        return self.occupations.shape[1]

    def configuration(self, i: int):
        if self.side == "fep":
            return Configuration(self.n_sites + 1, self.occupations[i])
        return SepConfiguration(self.n_sites + 1, self.occupations[i])

    def configurations(self) -> list:
        return [self.configuration(i) for i in range(self.times.size)]


def _snapshot_times(t_end: float, snapshot_times) -> np.ndarray:
    if snapshot_times is None:
        times = np.array([t_end], dtype=float)
    else:
        times = np.asarray(sorted(set(float(t) for t in snapshot_times)), float)
        if times.size == 0:
            times = np.array([t_end], dtype=float)
    if times.min() < 0 or times.max() > t_end + 1e-12:
        raise DomainError("snapshot times must lie in [0, t_end]")
    return times


def fep_simulate(
    initial: Configuration,
    params: Params,
    t_end: float,
    snapshot_times=None,
    seed: int = 0,
) -> Trajectory:
    """Exact trajectory of the facilitated process from an ergodic state."""
    if not is_ergodic(initial):
        raise DomainError("initial configuration must be ergodic")
    times = _snapshot_times(t_end, snapshot_times)
    snaps, events, absorbed = K.run_replicas(
        initial.occupations[None, :],
        K.FEP,
        params.rate_right,
        params.rate_left,
        times,
        np.uint64(seed),
    )
    return Trajectory(
        side="fep",
        times=times,
        occupations=snaps[0],
        seed=seed,
        params=params,
        n_events=int(events[0]),
        absorbed=bool(absorbed[0]),
    )


def sep_simulate(
    initial: SepConfiguration,
    params: Params,
    t_end: float,
    snapshot_times=None,
    seed: int = 0,
) -> Trajectory:
    """Exact trajectory of the code-word process.

    `params.N` is the originating lattice scale: the acceleration and the
    weak-asymmetry rate both use N, not the code lattice size M.
    """
    times = _snapshot_times(t_end, snapshot_times)
    snaps, events, absorbed = K.run_replicas(
        initial.occupations[None, :],
        K.SEP,
        params.rate_right,
        params.rate_left,
        times,
        np.uint64(seed),
    )
    return Trajectory(
        side="sep",
        times=times,
        occupations=snaps[0],
        seed=seed,
        params=params,
        n_events=int(events[0]),
        absorbed=bool(absorbed[0]),
    )


def fep_replicas(
    initials: np.ndarray, params: Params, snapshot_times, master_seed: int
):
    """Batched independent replicas (merged by index); returns raw snapshots."""
    times = np.asarray(snapshot_times, float)
    return K.run_replicas(
        np.ascontiguousarray(initials, np.uint8),
        K.FEP,
        params.rate_right,
        params.rate_left,
        times,
        np.uint64(master_seed),
    )


def sep_replicas(
    initials: np.ndarray, params: Params, snapshot_times, master_seed: int
):
    times = np.asarray(snapshot_times, float)
    return K.run_replicas(
        np.ascontiguousarray(initials, np.uint8),
        K.SEP,
        params.rate_right,
        params.rate_left,
        times,
        np.uint64(master_seed),
    )


# ---------------------------------------------------------------------------
# exact generators, uniformization oracle, transition-level coupling check
# ---------------------------------------------------------------------------

GENERATOR_STATE_CAP = 10**5


def enabled_transitions(occ: np.ndarray, kind: int, params: Params):
    """All enabled (bond, direction, rate, new occupations) from one state."""
    ob = _padded(occ, kind)
    out = []
    for bond in range(1, occ.size):
        if K._enabled_right.py_func(ob, bond, kind):
            new = occ.copy()
            new[bond - 1], new[bond] = 0, 1
            out.append((bond, "right", params.rate_right, new))
        if K._enabled_left.py_func(ob, bond, kind):
            new = occ.copy()
            new[bond - 1], new[bond] = 1, 0
            out.append((bond, "left", params.rate_left, new))
    return out


def enumerate_sep_states(M: int, ell: int) -> list[SepConfiguration]:
    """All code words on {1..M-1} with ell particles, lexicographic."""
    n = M - 1
    if ell < 0 or ell > n:
        return []
    states = []
    for holes in itertools.combinations(range(n), n - ell):
        occ = np.ones(n, np.uint8)
        occ[list(holes)] = 0
        states.append(SepConfiguration(M, occ))
    states.sort(key=lambda s: s.to_string())
    return states


def exact_generator(
    N: int, params: Params, side: str = "fep", k: int | None = None, ell: int | None = None
):
    """Dense generator matrix on an enumerated state space; rows sum to zero.

    side="fep": states are the ergodic k-particle configurations on N
    (all ergodic states when k is None).  side="sep": states are the
    ell-particle code words on a lattice of size M=N (params still carry the
    originating scale for the rates).  Returns (states, matrix).
    """
    if side == "fep":
        states = enumerate_ergodic(N, k)
        occs = [s.occupations for s in states]
        kind = K.FEP
    elif side == "sep":
        if ell is None:
            raise DomainError("sep generator needs the particle count ell")
        states = enumerate_sep_states(N, ell)
        occs = [s.occupations for s in states]
        kind = K.SEP
    else:
        raise DomainError("side must be 'fep' or 'sep'")
    n = len(states)
    if n > GENERATOR_STATE_CAP:
        raise EnumerationCapError(f"state space of size {n} exceeds the cap")
    index = {occ.tobytes(): i for i, occ in enumerate(occs)}
    Q = np.zeros((n, n))
    for i, occ in enumerate(occs):
        for bond, direction, rate, new in enabled_transitions(occ, kind, params):
            j = index.get(new.tobytes())
            if j is None:
                continue  # leaves the restricted space (never happens for k-sectors)
            Q[i, j] += rate
            Q[i, i] -= rate
    return states, Q


def uniformized_distribution(Q: np.ndarray, p0: np.ndarray, t: float) -> np.ndarray:
    """Exact law at time t from the generator, by uniformization.

    p(t) = sum_j Poisson(lambda t)(j) p0 P^j with P = I + Q/lambda; the series
    is truncated once the remaining Poisson mass drops below 1e-14.
    """
    lam = float(np.max(-np.diag(Q)))
    if lam <= 0:
        return p0.copy()
    P = np.eye(Q.shape[0]) + Q / lam
    mu = lam * t
    v = p0.astype(float).copy()
    out = np.zeros_like(v)
    log_term = -mu  # log of Poisson weight
    weight = np.exp(log_term)
    acc = weight
    out += weight * v
    j = 0
    while acc < 1.0 - 1e-14 and j < 10_000_000:
        j += 1
        v = v @ P
        weight *= mu / j
        acc += weight
        out += weight * v
    return out


def total_variation(p: np.ndarray, q: np.ndarray) -> float:
    return 0.5 * float(np.abs(np.asarray(p) - np.asarray(q)).sum())


@dataclass
class CouplingReport:
    """Outcome of the exhaustive transition-level check of the recoding."""

    N: int
    params: Params
    n_configs: int = 0
    n_transitions: int = 0
    mismatches: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.mismatches


COUPLING_CAP = 14


def verify_coupling(N: int, params: Params | None = None) -> CouplingReport:
    """Check that encoding intertwines the two dynamics transition by transition.

    For every ergodic state and every enabled facilitated jump, the encoded
    states must differ by one adjacent swap in the same direction with the
    same rate, and the enabled move counts must agree, which makes the
    correspondence a rate-preserving bijection.
    """
    if N > COUPLING_CAP:
        raise EnumerationCapError(f"coupling check limited to N <= {COUPLING_CAP}")
    if params is None:
        params = Params(sigma=1.0, p=2.0, kappa=0.5, N=N)
    report = CouplingReport(N=N, params=params)
    for eta in enumerate_ergodic(N):
        report.n_configs += 1
        xi = phi(eta)
        fep_moves = enabled_transitions(eta.occupations, K.FEP, params)
        sep_moves = enabled_transitions(xi.occupations, K.SEP, params)
        if len(fep_moves) != len(sep_moves):
            report.mismatches.append(
                {
                    "config": eta.to_string(),
                    "reason": "move-count mismatch",
                    "fep_moves": len(fep_moves),
                    "sep_moves": len(sep_moves),
                }
            )
            continue
        sep_lookup = {
            (new.tobytes()): (bond, direction, rate)
            for bond, direction, rate, new in sep_moves
        }
        for bond, direction, rate, new in fep_moves:
            report.n_transitions += 1
            eta_new = Configuration(N, new)
            xi_new = phi(eta_new)
            entry = sep_lookup.get(xi_new.occupations.tobytes())
            if entry is None:
                report.mismatches.append(
                    {
                        "config": eta.to_string(),
                        "bond": bond,
                        "direction": direction,
                        "reason": "image is not an enabled code-word move",
                        "image": xi_new.to_string(),
                    }
                )
                continue
            sep_bond, sep_direction, sep_rate = entry
            if sep_direction != direction:
                report.mismatches.append(
                    {
                        "config": eta.to_string(),
                        "bond": bond,
                        "direction": direction,
                        "reason": f"direction flips to {sep_direction}",
                    }
                )
            if sep_rate != rate:
                report.mismatches.append(
                    {
                        "config": eta.to_string(),
                        "bond": bond,
                        "direction": direction,
                        "reason": f"rate {rate!r} maps to {sep_rate!r}",
                    }
                )
    return report
