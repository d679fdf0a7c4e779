"""Compiled event loops and the counter-based random stream.

Everything on the per-event hot path lives here as numba kernels working on
plain arrays.  Each replica owns a private stream derived from
(master seed, replica index), so results never depend on scheduling,
thread count, or the order replicas finish in.

The stream is the splitmix64 construction: the state walks an arithmetic
sequence mod 2**64 and every output is an avalanche hash of the state,
which makes it a pure counter-based generator.
"""

from __future__ import annotations

import numpy as np
from numba import njit, prange

U64 = np.uint64

_GOLDEN = U64(0x9E3779B97F4A7C15)
_MIX_A = U64(0xBF58476D1CE4E5B9)
_MIX_B = U64(0x94D049BB133111EB)
_INV_2_53 = 1.0 / 9007199254740992.0

FEP = 0
SEP = 1


@njit(cache=True, inline="always")
def _mix64(z):
    z = (z ^ (z >> U64(30))) * _MIX_A
    z = (z ^ (z >> U64(27))) * _MIX_B
    return z ^ (z >> U64(31))


@njit(cache=True)
def stream_seed(master, index):
    """Stream state for replica `index` of run `master` (kernel-side)."""
    return _mix64(_mix64(master + _GOLDEN) + (index + U64(1)) * _GOLDEN)


def seed_state(master: int, index: int = 0) -> np.uint64:
    """Python-side stream seeding.

    Kernels must receive uint64 state: a bare python int would specialise
    them for int64 and silently detune the arithmetic (or overflow above
    2**63), so every state crossing the python/kernel boundary goes through
    here or through an explicit np.uint64 cast.
    """
    return np.uint64(stream_seed(np.uint64(master), np.uint64(index)))


@njit(cache=True, inline="always")
def _next_raw(state):
    state = state + _GOLDEN
    return state, _mix64(state)


@njit(cache=True, inline="always")
def _next_uniform(state):
    # uniform on (0, 1]: safe as a log argument
    state, x = _next_raw(state)
    return state, (np.float64(x >> U64(11)) + 1.0) * _INV_2_53


def mix64_py(z: int) -> int:
    """Pure-python mirror of the avalanche hash (seed derivation helper)."""
    mask = (1 << 64) - 1
    z &= mask
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & mask
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & mask
    return z ^ (z >> 31)


def derive_seed(master: int, *indices: int) -> int:
    """Deterministic sub-seed for a nested run (ladder point, replica, ...)."""
    golden = 0x9E3779B97F4A7C15
    mask = (1 << 64) - 1
    s = mix64_py((master + golden) & mask)
    for ix in indices:
        s = mix64_py((s + (ix + 1) * golden) & mask)
    return s


# ---------------------------------------------------------------------------
# jump-enable rules
#
# `ob` is the padded occupancy: ob[0] and ob[n+1] are the walls, ob[1..n]
# the stored sites.  For the facilitated process the walls count as frozen
# particles; bond x sits between sites x and x+1 for x = 1..n-1.
# ---------------------------------------------------------------------------


@njit(cache=True, inline="always")
def _enabled_right(ob, x, kind):
    if kind == FEP:
        return ob[x - 1] & ob[x] & (1 - ob[x + 1])
    return ob[x] & (1 - ob[x + 1])


@njit(cache=True, inline="always")
def _enabled_left(ob, x, kind):
    if kind == FEP:
        return (1 - ob[x]) & ob[x + 1] & ob[x + 2]
    return (1 - ob[x]) & ob[x + 1]


@njit(cache=True)
def count_enabled(ob, nsites, kind):
    cr = 0
    cl = 0
    for x in range(1, nsites):
        cr += _enabled_right(ob, x, kind)
        cl += _enabled_left(ob, x, kind)
    return cr, cl


@njit(cache=True, inline="always")
def _set_add(act, pos, count, x):
    act[count] = x
    pos[x] = count
    return count + 1


@njit(cache=True, inline="always")
def _set_remove(act, pos, count, x):
    i = pos[x]
    last = act[count - 1]
    act[i] = last
    pos[last] = i
    pos[x] = -1
    return count - 1


@njit(cache=True)
def run_exclusion(ob, kind, rate_right, rate_left, snap_times, snaps, state):
    """Exact continuous-time evolution of one replica.

    Mutates `ob` in place, records ob[1..n] into `snaps[s]` at each requested
    time, and returns (rng state, event count, absorbed flag).  Rates must
    already include the time-scale factor, so `snap_times` are macroscopic.
    """
    nsites = ob.size - 2
    nb = nsites - 1
    nsnap = snap_times.size

    act_r = np.empty(max(nb, 1), np.int64)
    pos_r = np.full(nb + 1, -1, np.int64)
    act_l = np.empty(max(nb, 1), np.int64)
    pos_l = np.full(nb + 1, -1, np.int64)
    cr = 0
    cl = 0
    for x in range(1, nsites):
        if _enabled_right(ob, x, kind):
            cr = _set_add(act_r, pos_r, cr, x)
        if _enabled_left(ob, x, kind):
            cl = _set_add(act_l, pos_l, cl, x)

    t = 0.0
    si = 0
    n_events = 0
    absorbed = False
    while si < nsnap and snap_times[si] <= t:
        snaps[si, :] = ob[1 : nsites + 1]
        si += 1

    while si < nsnap:
        total = cr * rate_right + cl * rate_left
        if total <= 0.0:
            absorbed = True
            while si < nsnap:
                snaps[si, :] = ob[1 : nsites + 1]
                si += 1
            break

        state, u = _next_uniform(state)
        t_next = t - np.log(u) / total
        while si < nsnap and snap_times[si] < t_next:
            snaps[si, :] = ob[1 : nsites + 1]
            si += 1
        if si >= nsnap:
            break
        t = t_next

        state, u = _next_uniform(state)
        z = u * total
        if z < cr * rate_right:
            i = min(np.int64(z / rate_right), cr - 1)
            x = act_r[i]
            ob[x] = 0
            ob[x + 1] = 1
        else:
            i = min(np.int64((z - cr * rate_right) / rate_left), cl - 1)
            x = act_l[i]
            ob[x] = 1
            ob[x + 1] = 0
        n_events += 1

        lo = x - 2 if x - 2 > 1 else 1
        hi = x + 2 if x + 2 < nb else nb
        for b in range(lo, hi + 1):
            er = _enabled_right(ob, b, kind)
            if er and pos_r[b] < 0:
                cr = _set_add(act_r, pos_r, cr, b)
            elif not er and pos_r[b] >= 0:
                cr = _set_remove(act_r, pos_r, cr, b)
            el = _enabled_left(ob, b, kind)
            if el and pos_l[b] < 0:
                cl = _set_add(act_l, pos_l, cl, b)
            elif not el and pos_l[b] >= 0:
                cl = _set_remove(act_l, pos_l, cl, b)

    return state, n_events, absorbed


@njit(cache=True, parallel=True)
def run_replicas(occ0, kind, rate_right, rate_left, snap_times, master_seed):
    """Independent replicas, merged by index: order and thread count never matter."""
    nrep, nsites = occ0.shape
    nsnap = snap_times.size
    snaps = np.empty((nrep, nsnap, nsites), np.uint8)
    events = np.zeros(nrep, np.int64)
    absorbed = np.zeros(nrep, np.uint8)
    for r in prange(nrep):
        ob = np.zeros(nsites + 2, np.uint8)
        if kind == FEP:
            ob[0] = 1
            ob[nsites + 1] = 1
        ob[1 : nsites + 1] = occ0[r]
        state = stream_seed(master_seed, U64(r))
        state, ne, ab = run_exclusion(
            ob, kind, rate_right, rate_left, snap_times, snaps[r], state
        )
        events[r] = ne
        absorbed[r] = 1 if ab else 0
    return snaps, events, absorbed


# ---------------------------------------------------------------------------
# cumulative (binary indexed) rate table; one leaf per (bond, direction)
# ---------------------------------------------------------------------------


@njit(cache=True)
def fenwick_init(leaf):
    n = leaf.size
    tree = np.zeros(n + 1, np.float64)
    for i in range(1, n + 1):
        tree[i] += leaf[i - 1]
        j = i + (i & (-i))
        if j <= n:
            tree[j] += tree[i]
    return tree


@njit(cache=True, inline="always")
def fenwick_add(tree, i, delta):
    # i is 0-based leaf index
    j = i + 1
    n = tree.size - 1
    while j <= n:
        tree[j] += delta
        j += j & (-j)


@njit(cache=True)
def fenwick_total(tree):
    n = tree.size - 1
    s = 0.0
    j = n
    while j > 0:
        s += tree[j]
        j -= j & (-j)
    return s


@njit(cache=True)
def fenwick_find(tree, target):
    """Smallest 0-based leaf with cumulative sum exceeding `target`."""
    n = tree.size - 1
    step = 1
    while step * 2 <= n:
        step *= 2
    pos = 0
    rem = target
    while step > 0:
        nxt = pos + step
        if nxt <= n and tree[nxt] <= rem:
            pos = nxt
            rem -= tree[nxt]
        step //= 2
    return pos


@njit(cache=True, inline="always")
def move_rate(ob, bond, direction, kind, rate_right, rate_left):
    if direction == 0:
        return rate_right if _enabled_right(ob, bond, kind) else 0.0
    return rate_left if _enabled_left(ob, bond, kind) else 0.0


@njit(cache=True)
def fill_leaf_rates(ob, kind, rate_right, rate_left, leaf):
    nb = leaf.size // 2
    for b in range(1, nb + 1):
        leaf[2 * (b - 1)] = move_rate(ob, b, 0, kind, rate_right, rate_left)
        leaf[2 * (b - 1) + 1] = move_rate(ob, b, 1, kind, rate_right, rate_left)


@njit(cache=True)
def table_step(ob, kind, rate_right, rate_left, leaf, tree, state):
    """One exact jump using the cumulative table; returns (state, dt, bond, dir).

    dt is +inf when no move is enabled (absorbing state).  Table and
    occupancy are updated in place so the call can be chained.
    """
    total = fenwick_total(tree)
    if total <= 0.0:
        return state, np.inf, -1, -1
    state, u = _next_uniform(state)
    dt = -np.log(u) / total
    state, u = _next_uniform(state)
    slot = fenwick_find(tree, u * total)
    if slot >= leaf.size:
        slot = leaf.size - 1
    if leaf[slot] <= 0.0:  # float edge: step to the nearest enabled move
        s2 = slot + 1
        while s2 < leaf.size and leaf[s2] <= 0.0:
            s2 += 1
        if s2 >= leaf.size:
            s2 = slot - 1
            while s2 >= 0 and leaf[s2] <= 0.0:
                s2 -= 1
        slot = s2
    bond = slot // 2 + 1
    direction = slot % 2
    if direction == 0:
        ob[bond] = 0
        ob[bond + 1] = 1
    else:
        ob[bond] = 1
        ob[bond + 1] = 0
    nb = leaf.size // 2
    lo = bond - 2 if bond - 2 > 1 else 1
    hi = bond + 2 if bond + 2 < nb else nb
    for b in range(lo, hi + 1):
        for d in range(2):
            s = 2 * (b - 1) + d
            r = move_rate(ob, b, d, kind, rate_right, rate_left)
            if r != leaf[s]:
                fenwick_add(tree, s, r - leaf[s])
                leaf[s] = r
    return state, dt, bond, direction


# ---------------------------------------------------------------------------
# initial-state sampler: left-to-right chain, holes always followed by a
# particle, so no two holes are ever adjacent
# ---------------------------------------------------------------------------


@njit(cache=True)
def sample_profile_chain(rho_sites, state):
    n = rho_sites.size
    occ = np.empty(n, np.uint8)
    prev = 1  # left wall
    for i in range(n):
        if prev == 0:
            occ[i] = 1
        else:
            state, u = _next_uniform(state)
            r = rho_sites[i]
            occ[i] = 0 if u < (1.0 - r) / r else 1
        prev = occ[i]
    return occ, state


@njit(cache=True)
def sample_bernoulli(prob_sites, state):
    n = prob_sites.size
    occ = np.empty(n, np.uint8)
    for i in range(n):
        state, u = _next_uniform(state)
        occ[i] = 1 if u <= prob_sites[i] else 0
    return occ, state
