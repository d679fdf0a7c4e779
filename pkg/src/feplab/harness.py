"""Initial-state sampling, replica orchestration, convergence experiments.

The experiments compare replica-averaged smoothed empirical densities of the
simulated particle system against the matching limit equation on a ladder of
lattice sizes, reporting L1 errors with bootstrap standard errors plus
pairings against a fixed battery of smooth test functions.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field

import numpy as np

from . import _kernels as K
from .errors import DomainError
from .lattice import (
    Configuration,
    Params,
    Regime,
    classify_regime,
    site_cells,
)
from .mapping import (
    Profile,
    SepConfiguration,
    _cell_average,
    macro_forward,
    phi,
    sep_empirical_density,
)
from .pde import (
    solve_burgers_entropy,
    solve_conservation_law_entropy,
    solve_convection_diffusion_robin,
    solve_fast_diffusion_neumann,
    solve_heat_neumann,
    solve_viscous_burgers_robin,
)
from .profiles import make_profile

BOOTSTRAP_RESAMPLES = 200


def sample_initial(rho_ini: Profile, N: int, seed: int = 0) -> Configuration:
    """Ergodic configuration associated with a supercritical density profile.

    Sites are scanned left to right: after a hole the next site is occupied
    outright (no two adjacent holes can appear), after a particle the next
    site is empty with probability (1-rho)/rho, whose stationary marginal is
    rho.  Requires min rho > 1/2.
    """
    vals = rho_ini.values
    if vals.min() <= 0.5:
        raise DomainError("sampling requires density values strictly above 1/2")
    x = np.arange(1, N, dtype=float) / N
    rho_sites = np.asarray(rho_ini(x), float)
    occ, _ = K.sample_profile_chain(rho_sites, K.seed_state(seed))
    return Configuration(N, occ)


def sample_initial_batch(rho_ini: Profile, N: int, replicas: int, master_seed: int) -> np.ndarray:
    """Stacked replica initial states, one derived stream per replica."""
    vals = rho_ini.values
    if vals.min() <= 0.5:
        raise DomainError("sampling requires density values strictly above 1/2")
    x = np.arange(1, N, dtype=float) / N
    rho_sites = np.asarray(rho_ini(x), float)
    out = np.empty((replicas, N - 1), np.uint8)
    for r in range(replicas):
        occ, _ = K.sample_profile_chain(rho_sites, K.seed_state(master_seed, r))
        out[r] = occ
    return out


def smooth(data, K_cells: int) -> np.ndarray:
    """Replica-averaged box binning into K_cells cells of [0, 1].

    `data` is either an EmpiricalDensity (rebinned by exact box averaging)
    or an (replicas, sites) occupation matrix.  Deterministic and linear in
    the replica average.
    """
    if hasattr(data, "values") and hasattr(data, "K"):
        nodes = np.arange(data.K + 1) / data.K
        return _cell_average(nodes, np.asarray(data.values, float), K_cells)
    occ = np.atleast_2d(np.asarray(data))
    nsites = occ.shape[1]
    cells = site_cells(nsites + 1, K_cells)
    counts = np.bincount(cells, minlength=K_cells)
    totals = np.zeros(K_cells)
    for row in occ:
        totals += np.bincount(cells, weights=row, minlength=K_cells)
    return np.divide(
        totals / occ.shape[0], counts, out=np.zeros(K_cells), where=counts > 0
    )


# fixed battery for the pairing checks: low polynomials, two cosine modes,
# two bumps
def pairing_battery():
    def bump(c, w):
        def fn(u):
            z = (np.asarray(u, float) - c) / w
            out = np.zeros_like(z)
            inside = np.abs(z) < 1
            out[inside] = np.exp(1.0 - 1.0 / (1.0 - z[inside] ** 2))
            return out

        return fn

    return {
        "one": lambda u: np.ones_like(np.asarray(u, float)),
        "u": lambda u: np.asarray(u, float),
        "u2": lambda u: np.asarray(u, float) ** 2,
        "u3": lambda u: np.asarray(u, float) ** 3,
        "cos_pi": lambda u: np.cos(np.pi * np.asarray(u, float)),
        "cos_2pi": lambda u: np.cos(2 * np.pi * np.asarray(u, float)),
        "bump_l": bump(0.3, 0.2),
        "bump_r": bump(0.7, 0.25),
    }


@dataclass
class Experiment:
    """One convergence study: regime, initial profile, ladder, observation times."""

    regime: str
    sigma: float
    p: float
    kappa: float
    rho_ini: str
    lattice_sizes: list = field(default_factory=lambda: [256, 512, 1024, 2048])
    times: list = field(default_factory=lambda: [0.1])
    replicas: int = 16
    seed: int = 0
    cells: int = 20
    pde_cells: int = 400
    shock_exclusion_halfwidth: float = 0.0

    def __post_init__(self):
        self.regime = str(self.regime).lower()
        declared = Regime(self.regime)
        if self.p < 0 or self.kappa < 0 or self.sigma <= 0:
            raise DomainError("need sigma > 0 and nonnegative p, kappa")
        actual = classify_regime(self.p, self.kappa)
        if actual is not declared:
            raise DomainError(
                f"parameters (p={self.p}, kappa={self.kappa}) classify as "
                f"{actual.value}, not {self.regime}"
            )
        if declared is Regime.AFEPVV and not 0.5 < self.kappa < 1.0:
            raise DomainError(
                "the hyperbolic limit statement needs kappa strictly inside (1/2, 1)"
            )
        if not self.times or min(self.times) < 0:
            raise DomainError("need at least one nonnegative observation time")
        if self.replicas < 1 or self.cells < 1:
            raise DomainError("replicas and cells must be positive")

    @property
    def horizon(self) -> float:
        return max(self.times)

    def profile(self) -> Profile:
        prof = make_profile(self.rho_ini, self.pde_cells, side="fep")
        if prof.values.min() <= 0.5:
            raise DomainError("initial profile must stay strictly above 1/2")
        return prof

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "Experiment":
        return cls(**json.loads(text))


def reference_solution(exp: Experiment, prof: Profile):
    """Limit-equation run for the experiment's regime, saved at its times."""
    save = sorted(set([0.0] + [float(t) for t in exp.times]))
    regime = Regime(exp.regime)
    if regime in (Regime.SFEP, Regime.VWAFEP):
        return solve_fast_diffusion_neumann(
            prof, exp.sigma, exp.horizon, save_times=save
        )
    if regime is Regime.WAFEP:
        return solve_convection_diffusion_robin(
            prof, exp.sigma, exp.p, exp.horizon, save_times=save
        )
    return solve_conservation_law_entropy(
        prof, exp.p, exp.horizon, save_times=save
    )


def sep_reference_solution(exp: Experiment, prof: Profile):
    """Code-word-frame limit equation from the lifted initial profile."""
    omega_ini, mm = macro_forward(prof)
    save = sorted(set([0.0] + [float(t) for t in exp.times]))
    regime = Regime(exp.regime)
    if regime in (Regime.SFEP, Regime.VWAFEP):
        sol = solve_heat_neumann(omega_ini, exp.sigma, mm.m, exp.horizon, save_times=save)
    elif regime is Regime.WAFEP:
        sol = solve_viscous_burgers_robin(
            omega_ini, exp.sigma, exp.p, mm.m, exp.horizon, save_times=save
        )
    else:
        sol = solve_burgers_entropy(omega_ini, exp.p, mm.m, exp.horizon, save_times=save)
    return sol, mm


def _bin_reference(ref_frame: np.ndarray, K_cells: int) -> np.ndarray:
    Kp = ref_frame.size
    if Kp % K_cells == 0:
        return ref_frame.reshape(K_cells, Kp // K_cells).mean(axis=1)
    centers = (np.arange(K_cells) + 0.5) / K_cells
    src = np.minimum((centers * Kp).astype(int), Kp - 1)
    return ref_frame[src]


def _bootstrap_se(per_replica: np.ndarray, ref_binned: np.ndarray, seed: int) -> float:
    """Bootstrap standard error of the replica-averaged L1 distance."""
    rng = np.random.default_rng(seed)
    R = per_replica.shape[0]
    stats = np.empty(BOOTSTRAP_RESAMPLES)
    for b in range(BOOTSTRAP_RESAMPLES):
        pick = rng.integers(0, R, size=R)
        mean = per_replica[pick].mean(axis=0)
        stats[b] = np.abs(mean - ref_binned).mean()
    return float(stats.std(ddof=1))


@dataclass
class LadderRow:
    N: int
    time: float
    error_l1: float
    bootstrap_se: float
    error_l1_masked: float
    battery: dict
    extra: dict = field(default_factory=dict)


@dataclass
class ConvergenceTable:
    side: str
    experiment: Experiment
    rows: list

    def errors(self, time: float) -> list:
        return [r.error_l1 for r in self.rows if abs(r.time - time) < 1e-12]

    def monotone_up_to_one_inversion(self, time: float, masked: bool = False) -> bool:
        errs = [
            (r.error_l1_masked if masked else r.error_l1)
            for r in self.rows
            if abs(r.time - time) < 1e-12
        ]
        inversions = sum(1 for a, b in zip(errs, errs[1:]) if b > a)
        return inversions <= 1

    def to_text(self) -> str:
        lines = [
            f"# side={self.side} regime={self.experiment.regime} "
            f"sigma={self.experiment.sigma!r} p={self.experiment.p!r} "
            f"kappa={self.experiment.kappa!r} seed={self.experiment.seed}",
            "# N time error_l1 bootstrap_se error_l1_masked "
            + " ".join(sorted(pairing_battery())),
        ]
        for r in self.rows:
            battery = " ".join(f"{r.battery[k]:.17g}" for k in sorted(r.battery))
            lines.append(
                f"{r.N} {r.time:.17g} {r.error_l1:.17g} {r.bootstrap_se:.17g} "
                f"{r.error_l1_masked:.17g} {battery}"
            )
        return "\n".join(lines) + "\n"


def _shock_mask(ref_binned: np.ndarray, K_cells: int, halfwidth: float) -> np.ndarray:
    """Cells kept when excluding a window around the steepest reference jump."""
    keep = np.ones(K_cells, dtype=bool)
    if halfwidth <= 0 or K_cells < 3:
        return keep
    jumps = np.abs(np.diff(ref_binned))
    edge = int(np.argmax(jumps))
    center = (edge + 1) / K_cells
    centers = (np.arange(K_cells) + 0.5) / K_cells
    keep[np.abs(centers - center) <= halfwidth] = False
    return keep


def run_convergence(exp: Experiment) -> ConvergenceTable:
    """Particle-frame ladder: replica-averaged densities against the limit PDE."""
    prof = exp.profile()
    ref = reference_solution(exp, prof)
    battery = pairing_battery()
    rows = []
    for N in exp.lattice_sizes:
        seed_n = K.derive_seed(exp.seed, N)
        initials = sample_initial_batch(prof, N, exp.replicas, K.derive_seed(seed_n, 1))
        params = Params(sigma=exp.sigma, p=exp.p, kappa=exp.kappa, N=N)
        snaps, _, _ = K.run_replicas(
            initials,
            K.FEP,
            params.rate_right,
            params.rate_left,
            np.asarray([float(t) for t in exp.times]),
            np.uint64(K.derive_seed(seed_n, 2)),
        )
        x = np.arange(1, N, dtype=float) / N
        for ti, t in enumerate(exp.times):
            frame = ref.frame(float(t))
            ref_binned = _bin_reference(frame, exp.cells)
            per_replica = np.stack(
                [smooth(snaps[r, ti][None, :], exp.cells) for r in range(exp.replicas)]
            )
            mean_density = per_replica.mean(axis=0)
            err = float(np.abs(mean_density - ref_binned).mean())
            keep = _shock_mask(ref_binned, exp.cells, exp.shock_exclusion_halfwidth)
            err_masked = float(np.abs(mean_density[keep] - ref_binned[keep]).mean())
            se = _bootstrap_se(per_replica, ref_binned, K.derive_seed(seed_n, 3))
            dev = {}
            ref_centers = ref.centers
            for name, G in battery.items():
                target = float(np.mean(np.asarray(G(ref_centers)) * frame))
                pairing = float(
                    np.mean(snaps[:, ti] @ np.asarray(G(x))) / N
                )
                dev[name] = abs(pairing - target)
            rows.append(
                LadderRow(
                    N=N,
                    time=float(t),
                    error_l1=err,
                    bootstrap_se=se,
                    error_l1_masked=err_masked,
                    battery=dev,
                )
            )
    return ConvergenceTable(side="fep", experiment=exp, rows=rows)


def run_sep_convergence(exp: Experiment, direct: bool = False) -> ConvergenceTable:
    """Code-word-frame ladder.

    Default mode simulates the particle system and pushes every snapshot
    through the encoding; `direct=True` instead draws product initial data
    for the code words (size M = round(m N) + 2) and runs them natively.
    The acceleration always uses the particle-frame N.
    """
    prof = exp.profile()
    ref, mm = sep_reference_solution(exp, prof)
    battery = pairing_battery()
    rows = []
    for N in exp.lattice_sizes:
        seed_n = K.derive_seed(exp.seed, N, 7 if direct else 5)
        params = Params(sigma=exp.sigma, p=exp.p, kappa=exp.kappa, N=N)
        times = np.asarray([float(t) for t in exp.times])
        if direct:
            M = int(round(mm.m * N)) + 2
            v = np.arange(1, M, dtype=float) / M
            omega_sites = np.interp(v, (np.arange(ref.K) + 0.5) / ref.K, ref.values[0])
            initials = np.empty((exp.replicas, M - 1), np.uint8)
            for r in range(exp.replicas):
                occ, _ = K.sample_bernoulli(
                    omega_sites, K.seed_state(K.derive_seed(seed_n, 1), r)
                )
                initials[r] = occ
            snaps, _, _ = K.run_replicas(
                initials, K.SEP, params.rate_right, params.rate_left,
                times, np.uint64(K.derive_seed(seed_n, 2)),
            )
            sep_frames = {
                (r, ti): SepConfiguration(M, snaps[r, ti])
                for r in range(exp.replicas)
                for ti in range(times.size)
            }
            m_ratios = np.full(exp.replicas, M / N)
        else:
            initials = sample_initial_batch(prof, N, exp.replicas, K.derive_seed(seed_n, 1))
            snaps, _, _ = K.run_replicas(
                initials, K.FEP, params.rate_right, params.rate_left,
                times, np.uint64(K.derive_seed(seed_n, 2)),
            )
            sep_frames = {}
            m_ratios = np.empty(exp.replicas)
            for r in range(exp.replicas):
                for ti in range(times.size):
                    eta = Configuration(N, snaps[r, ti])
                    sep_frames[(r, ti)] = phi(eta)
                m_ratios[r] = sep_frames[(r, 0)].M / N
        for ti, t in enumerate(exp.times):
            frame = ref.frame(float(t))
            ref_binned = _bin_reference(frame, exp.cells)
            per_replica = np.stack(
                [
                    sep_empirical_density(sep_frames[(r, ti)], exp.cells).values
                    for r in range(exp.replicas)
                ]
            )
            mean_density = per_replica.mean(axis=0)
            err = float(np.abs(mean_density - ref_binned).mean())
            keep = _shock_mask(ref_binned, exp.cells, exp.shock_exclusion_halfwidth)
            err_masked = float(np.abs(mean_density[keep] - ref_binned[keep]).mean())
            se = _bootstrap_se(per_replica, ref_binned, K.derive_seed(seed_n, 3))
            dev = {}
            ref_centers = ref.centers
            for name, G in battery.items():
                target = float(np.mean(np.asarray(G(ref_centers)) * frame))
                vals = []
                for r in range(exp.replicas):
                    xi = sep_frames[(r, ti)]
                    y = np.arange(1, xi.M, dtype=float) / xi.M
                    vals.append(float(np.dot(np.asarray(G(y)), xi.occupations) / xi.M))
                dev[name] = abs(float(np.mean(vals)) - target)
            rows.append(
                LadderRow(
                    N=N,
                    time=float(t),
                    error_l1=err,
                    bootstrap_se=se,
                    error_l1_masked=err_masked,
                    battery=dev,
                    extra={"mean_abs_m_deviation": float(np.abs(m_ratios - mm.m).mean())},
                )
            )
    return ConvergenceTable(side="sep", experiment=exp, rows=rows)
