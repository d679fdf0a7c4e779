#!/usr/bin/env python3
"""Run one hydrodynamic ladder and print its error table.

Examples:
    python3 scripts/run_hydro_ladder.py --regime sfep
    python3 scripts/run_hydro_ladder.py --regime afepvv --sizes 256,512 --replicas 8
"""

import argparse

from feplab.harness import Experiment, run_convergence, run_sep_convergence

PRESETS = {
    "sfep": dict(sigma=1.0, p=0.0, kappa=1.0, rho_ini="linear:0.75,0.125"),
    "vwafep": dict(sigma=1.0, p=1.0, kappa=1.5, rho_ini="linear:0.75,0.125"),
    "wafep": dict(sigma=1.0, p=1.0, kappa=1.0, rho_ini="linear:0.75,0.125"),
    "afepvv": dict(
        sigma=0.2, p=1.0, kappa=0.75, rho_ini="step:0.51,1.0,0.5",
    ),
}


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--regime", choices=sorted(PRESETS), default="sfep")
    ap.add_argument("--sizes", default="256,512,1024,2048")
    ap.add_argument("--time", type=float, default=0.1)
    ap.add_argument("--replicas", type=int, default=16)
    ap.add_argument("--seed", type=int, default=2024)
    ap.add_argument("--cells", type=int, default=20)
    ap.add_argument("--side", choices=["fep", "sep"], default="fep")
    ap.add_argument("--out", default=None, help="optional path for the table")
    args = ap.parse_args()

    preset = PRESETS[args.regime]
    exp = Experiment(
        regime=args.regime,
        sigma=preset["sigma"],
        p=preset["p"],
        kappa=preset["kappa"],
        rho_ini=preset["rho_ini"],
        lattice_sizes=[int(s) for s in args.sizes.split(",")],
        times=[args.time],
        replicas=args.replicas,
        seed=args.seed,
        cells=args.cells,
        pde_cells=800 if args.regime == "afepvv" else 400,
        shock_exclusion_halfwidth=0.06 if args.regime == "afepvv" else 0.0,
    )
    table = run_sep_convergence(exp) if args.side == "sep" else run_convergence(exp)
    text = table.to_text()
    print(text)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)


if __name__ == "__main__":
    main()
