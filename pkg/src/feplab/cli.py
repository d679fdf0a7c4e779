"""Command-line front end with reproducible, file-based input and output.

Exit codes: 0 success, 1 verification failure (coupling mismatches),
2 usage or domain errors.  Every command writes a manifest recording the
full parameter set, seed, code version and digests of the emitted files;
rerunning with the same manifest parameters reproduces the outputs byte for
byte.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
import time

import numpy as np

from . import __version__
from ._kernels import derive_seed
from .errors import FepLabError, StabilityError
from .harness import (
    Experiment,
    run_convergence,
    run_sep_convergence,
    sample_initial,
    smooth,
)
from .lattice import Configuration, Params, Regime, classify_regime
from .mapping import (
    Profile,
    SepConfiguration,
    macro_forward,
    macro_inverse,
    phi,
    phi_inverse,
    sep_empirical_density,
)
from .dynamics import fep_simulate, sep_simulate, verify_coupling
from .pde import EQUATION_SOLVERS
from .profiles import make_profile

USAGE_ERROR = 2
VERIFY_ERROR = 1


def _sha256(path: str) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


def _write_manifest(out_dir, command, params, seed, outputs, started):
    manifest = {
        "command": command,
        "parameters": params,
        "seed": seed,
        "version": __version__,
        "wall_clock_s": time.time() - started,
        "outputs": {os.path.basename(p): _sha256(p) for p in outputs},
    }
    path = os.path.join(out_dir, "manifest.json")
    with open(path, "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return path


def _profile_for(args, side: str, cells: int) -> Profile:
    return make_profile(args.profile, cells, side=side)


def cmd_simulate(args) -> int:
    started = time.time()
    regime = Regime(args.regime)
    if regime is Regime.AFEPVV and not 0.5 < args.kappa < 1.0:
        raise FepLabError(
            "the afepvv hydrodynamic statement requires kappa strictly in (1/2, 1)"
        )
    declared = classify_regime(args.p, args.kappa)
    if declared is not regime:
        raise FepLabError(
            f"(p={args.p}, kappa={args.kappa}) classify as {declared.value}, "
            f"not {args.regime}"
        )
    params = Params(sigma=args.sigma, p=args.p, kappa=args.kappa, N=args.N)
    snapshot_times = (
        [float(x) for x in args.snapshots.split(",")] if args.snapshots else None
    )
    # sampling reads the profile on a fine internal grid; --cells only
    # controls the reported snapshot densities
    if args.side == "fep":
        prof = _profile_for(args, "fep", max(args.cells, 400))
        initial = sample_initial(prof, args.N, seed=derive_seed(args.seed, 1))
        traj = fep_simulate(
            initial, params, args.t_end, snapshot_times, seed=derive_seed(args.seed, 2)
        )
        densities = [
            smooth(traj.occupations[i][None, :], args.cells)
            for i in range(traj.times.size)
        ]
    else:
        prof = _profile_for(args, "sep", max(args.cells, 400))
        M = args.M or int(round(prof.mass() * args.N)) + 2
        from ._kernels import sample_bernoulli, seed_state

        v = np.arange(1, M, dtype=float) / M
        occ, _ = sample_bernoulli(
            np.asarray(prof(v), float), seed_state(derive_seed(args.seed, 1))
        )
        initial = SepConfiguration(M, occ)
        traj = sep_simulate(
            initial, params, args.t_end, snapshot_times, seed=derive_seed(args.seed, 2)
        )
        densities = [
            sep_empirical_density(
                SepConfiguration(M, traj.occupations[i]), args.cells
            ).values
            for i in range(traj.times.size)
        ]

    os.makedirs(args.out, exist_ok=True)
    dens_path = os.path.join(args.out, "snapshots.txt")
    with open(dens_path, "w") as fh:
        fh.write("# time cell density\n")
        for i, t in enumerate(traj.times):
            for j, val in enumerate(densities[i]):
                fh.write(f"{t:.17g} {j} {val:.17g}\n")
    states_path = os.path.join(args.out, "states.txt")
    with open(states_path, "w") as fh:
        for i, t in enumerate(traj.times):
            bits = "".join(str(int(b)) for b in traj.occupations[i])
            fh.write(f"{t:.17g} {bits}\n")
    _write_manifest(
        args.out,
        "simulate",
        {
            "side": args.side, "regime": args.regime, "sigma": args.sigma,
            "p": args.p, "kappa": args.kappa, "N": args.N, "M": getattr(args, "M", None),
            "t_end": args.t_end, "snapshots": args.snapshots,
            "profile": args.profile, "cells": args.cells,
            "n_events": traj.n_events, "absorbed": traj.absorbed,
        },
        args.seed,
        [dens_path, states_path],
        started,
    )
    return 0


def cmd_solve(args) -> int:
    started = time.time()
    solver = EQUATION_SOLVERS.get(args.equation)
    if solver is None:
        raise FepLabError(f"unknown equation tag {args.equation!r}")
    side = "fep" if args.equation in (
        "fast-diffusion-neumann", "convection-diffusion-robin",
        "conservation-law-dirichlet",
    ) else "sep"
    prof = _profile_for(args, side, args.grid)
    save = sorted({0.0, args.t_end} | (
        {float(x) for x in args.snapshots.split(",")} if args.snapshots else set()
    ))

    def run(K_cells):
        prof_k = _profile_for(args, side, K_cells)
        kw = dict(grid=K_cells, dt=args.dt, save_times=save)
        if args.equation == "heat-neumann":
            return solver(prof_k, args.sigma, args.mass, args.t_end, **kw)
        if args.equation == "fast-diffusion-neumann":
            return solver(prof_k, args.sigma, args.t_end, **kw)
        if args.equation == "viscous-burgers-robin":
            return solver(prof_k, args.sigma, args.p, args.mass, args.t_end, **kw)
        if args.equation == "convection-diffusion-robin":
            return solver(prof_k, args.sigma, args.p, args.t_end, **kw)
        kw.update(method=args.method, eps=args.epsilon)
        if args.equation == "burgers-dirichlet":
            return solver(prof_k, args.p, args.mass, args.t_end, **kw)
        return solver(prof_k, args.p, args.t_end, **kw)

    os.makedirs(args.out, exist_ok=True)
    sol = run(args.grid)
    matrix = os.path.join(args.out, "solution.txt")
    header = os.path.join(args.out, "solution.json")
    sol.save(matrix, header)
    outputs = [matrix, header]
    extra = {}
    if args.refine > 1:
        fine = run(args.grid * args.refine)
        coarse_of_fine = fine.values[-1].reshape(args.grid, args.refine).mean(axis=1)
        dist = float(np.abs(coarse_of_fine - sol.values[-1]).mean())
        fine_matrix = os.path.join(args.out, "solution_fine.txt")
        fine_header = os.path.join(args.out, "solution_fine.json")
        fine.save(fine_matrix, fine_header)
        refine_path = os.path.join(args.out, "refinement.txt")
        with open(refine_path, "w") as fh:
            fh.write(f"# L1 distance between K={args.grid} and K={args.grid * args.refine}\n")
            fh.write(f"{dist:.17g}\n")
        outputs += [fine_matrix, fine_header, refine_path]
        extra["l1_refinement_distance"] = dist
        print(f"refinement L1 distance: {dist:.6g}")
    _write_manifest(
        args.out, "solve",
        {"equation": args.equation, "sigma": args.sigma, "p": args.p,
         "mass": args.mass, "t_end": args.t_end, "grid": args.grid,
         "dt": args.dt, "method": args.method, "epsilon": args.epsilon,
         "profile": args.profile, "refine": args.refine, **extra},
        0, outputs, started,
    )
    return 0


def cmd_map(args) -> int:
    started = time.time()
    os.makedirs(args.out, exist_ok=True)
    outputs = []
    if args.config is not None:
        if args.inverse:
            if args.N is None:
                raise FepLabError("--inverse with --config needs -N")
            xi = SepConfiguration(len(args.config) + 1,
                                  [int(c) for c in args.config])
            eta = phi_inverse(xi, args.N)
            text, label = eta.to_string(), "configuration"
        else:
            eta = Configuration(len(args.config) + 1, [int(c) for c in args.config])
            text, label = phi(eta).to_string(), "code word"
        path = os.path.join(args.out, "mapped_configuration.txt")
        with open(path, "w") as fh:
            fh.write(text + "\n")
        print(f"{label}: {text}")
        outputs.append(path)
    else:
        if args.inverse:
            if args.mass is None:
                raise FepLabError("--inverse needs --mass")
            omega = _profile_for(args, "sep", args.grid)
            rho = macro_inverse(omega, args.mass)
            path = os.path.join(args.out, "rho.txt")
            rho.save(path)
            outputs.append(path)
        else:
            rho = _profile_for(args, "fep", args.grid)
            omega, mm = macro_forward(rho, relaxed=args.relaxed)
            opath = os.path.join(args.out, "omega.txt")
            mpath = os.path.join(args.out, "massmap.txt")
            omega.save(opath)
            mm.save(mpath)
            print(f"mass: {mm.m:.17g}")
            outputs += [opath, mpath]
    _write_manifest(
        args.out, "map",
        {"profile": args.profile, "config": args.config, "inverse": args.inverse,
         "mass": args.mass, "grid": args.grid, "N": args.N},
        0, outputs, started,
    )
    return 0


def cmd_check_coupling(args) -> int:
    started = time.time()
    triples = []
    for part in args.triples.split(";"):
        s, p, k = (float(v) for v in part.split(","))
        triples.append((s, p, k))
    os.makedirs(args.out, exist_ok=True)
    path = os.path.join(args.out, "coupling_report.txt")
    total_transitions = 0
    all_ok = True
    with open(path, "w") as fh:
        fh.write("# N sigma p kappa configs transitions mismatches\n")
        for N in range(2, args.N + 1):
            for s, p, k in triples:
                rep = verify_coupling(N, Params(sigma=s, p=p, kappa=k, N=N))
                total_transitions += rep.n_transitions
                all_ok &= rep.ok
                fh.write(
                    f"{N} {s!r} {p!r} {k!r} {rep.n_configs} "
                    f"{rep.n_transitions} {len(rep.mismatches)}\n"
                )
                for mm in rep.mismatches:
                    fh.write(f"# mismatch: {mm}\n")
    print(f"verified transitions: {total_transitions}; mismatches: {not all_ok}")
    _write_manifest(
        args.out, "check-coupling",
        {"N": args.N, "triples": args.triples, "transitions": total_transitions},
        0, [path], started,
    )
    return 0 if all_ok else VERIFY_ERROR


def cmd_converge(args) -> int:
    started = time.time()
    with open(args.spec) as fh:
        exp = Experiment.from_json(fh.read())
    table = run_sep_convergence(exp) if args.side == "sep" else run_convergence(exp)
    os.makedirs(args.out, exist_ok=True)
    path = os.path.join(args.out, "error_table.txt")
    with open(path, "w") as fh:
        fh.write(table.to_text())
    print(table.to_text())
    _write_manifest(
        args.out, "converge",
        {"spec": os.path.abspath(args.spec), "side": args.side},
        exp.seed, [path], started,
    )
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="feplab",
        description="exclusion-process laboratory: simulate, map, solve, verify",
    )
    ap.add_argument("--jobs", type=int, default=0,
                    help="worker threads for replica runs (0 = library default)")
    sub = ap.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="event-driven trajectory with snapshots")
    sim.add_argument("--side", choices=["fep", "sep"], default="fep")
    sim.add_argument("--regime", choices=[r.value for r in Regime], required=True)
    sim.add_argument("--sigma", type=float, default=1.0)
    sim.add_argument("--p", type=float, default=0.0)
    sim.add_argument("--kappa", type=float, default=0.0)
    sim.add_argument("-N", type=int, required=True)
    sim.add_argument("--M", type=int, default=None, help="code lattice size (sep side)")
    sim.add_argument("--t-end", dest="t_end", type=float, required=True)
    sim.add_argument("--snapshots", default=None, help="comma-separated times")
    sim.add_argument("--profile", required=True)
    sim.add_argument("--cells", type=int, default=20)
    sim.add_argument("--seed", type=int, default=0)
    sim.add_argument("--out", required=True)
    sim.set_defaults(func=cmd_simulate)

    sol = sub.add_parser("solve", help="finite-volume run of one limit equation")
    sol.add_argument("--equation", required=True)
    sol.add_argument("--sigma", type=float, default=1.0)
    sol.add_argument("--p", type=float, default=1.0)
    sol.add_argument("--mass", type=float, default=1.0)
    sol.add_argument("--t-end", dest="t_end", type=float, required=True)
    sol.add_argument("--grid", type=int, default=400)
    sol.add_argument("--dt", type=float, default=None)
    sol.add_argument("--snapshots", default=None)
    sol.add_argument("--method", choices=["godunov", "viscosity"], default="godunov")
    sol.add_argument("--epsilon", type=float, default=1e-3)
    sol.add_argument("--refine", type=int, default=1)
    sol.add_argument("--profile", required=True)
    sol.add_argument("--out", required=True)
    sol.set_defaults(func=cmd_solve)

    mp = sub.add_parser("map", help="micro or macro recoding, both directions")
    mp.add_argument("--profile", default=None)
    mp.add_argument("--config", default=None, help="0/1 string")
    mp.add_argument("--inverse", action="store_true")
    mp.add_argument("--forward", action="store_true")
    mp.add_argument("--mass", type=float, default=None)
    mp.add_argument("--relaxed", action="store_true",
                    help="admit density values equal to 1/2")
    mp.add_argument("--grid", type=int, default=400)
    mp.add_argument("-N", type=int, default=None)
    mp.add_argument("--out", required=True)
    mp.set_defaults(func=cmd_map)

    cc = sub.add_parser("check-coupling", help="exhaustive transition-level check")
    cc.add_argument("-N", type=int, default=12, help="largest lattice checked")
    cc.add_argument("--triples", default="1,0,0;1,2,1.5;1,2,1;1,2,0.75",
                    help="semicolon-separated sigma,p,kappa triples")
    cc.add_argument("--out", required=True)
    cc.set_defaults(func=cmd_check_coupling)

    cv = sub.add_parser("converge", help="hydrodynamic ladder from a JSON spec")
    cv.add_argument("--spec", required=True)
    cv.add_argument("--side", choices=["fep", "sep"], default="fep")
    cv.add_argument("--out", required=True)
    cv.set_defaults(func=cmd_converge)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    if args.jobs > 0:
        import numba

        numba.set_num_threads(args.jobs)
    try:
        return args.func(args)
    except StabilityError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return USAGE_ERROR
    except FepLabError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return USAGE_ERROR
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return USAGE_ERROR


if __name__ == "__main__":
    sys.exit(main())
