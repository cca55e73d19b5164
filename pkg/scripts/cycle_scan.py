"""Threshold versus number of noisy cycles, followed by the sustainable-threshold fit.

    python scripts/cycle_scan.py --family bcc3d --max-log2 7 --trials 2000 --out runs/bcc_cycles.json

Each cycle count gets its own grid of --points rates spanning +-rel around a guessed
threshold curve (ansatz with --guess p_sus gamma p_1).
"""
import argparse
import json

import numpy as np

from sweepca.montecarlo import FitError, ansatz, fit_sustainable, threshold_vs_cycles

# ansatz curves through short pilot runs; they only place the grid points
GUESSES = {"bcc3d": (0.0088, 1.07, 0.0855), "cubic3d": (0.0148, 0.80, 0.145)}


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--family", choices=sorted(GUESSES), default="bcc3d")
    ap.add_argument("--sizes", type=int, nargs="+", default=[8, 12, 16])
    ap.add_argument("--max-log2", type=int, default=7)
    ap.add_argument("--extra", type=int, nargs="*", default=[], help="additional cycle counts")
    ap.add_argument("--guess", type=float, nargs=3, default=None)
    ap.add_argument("--rel", type=float, default=0.25)
    ap.add_argument("--points", type=int, default=9)
    ap.add_argument("--trials", type=int, default=2000)
    ap.add_argument("--seed", type=int, default=7)
    ap.add_argument("--workers", type=int, default=None)
    ap.add_argument("--out", default=None)
    args = ap.parse_args()
    guess = args.guess or GUESSES[args.family]
    ns = sorted(set([2 ** i for i in range(args.max_log2 + 1)] + args.extra))
    grids = {n: [round(x, 6) for x in np.linspace(1 - args.rel, 1 + args.rel, args.points) * ansatz(n, *guess)]
             for n in ns}
    res = threshold_vs_cycles(args.family, args.sizes, grids, args.trials, args.seed,
                              n_boot=50, workers=args.workers)
    rows = []
    for n, est, curves in res:
        row = {"N_cyc": n, "grid": grids[n], "rates": {c.L: c.rates.tolist() for c in curves}}
        if isinstance(est, FitError):
            row["error"] = str(est)
        else:
            row.update(p_th=est.p_th, p_th_err=est.p_th_err, nu=est.nu)
        rows.append(row)
        print(json.dumps(row), flush=True)
    good = [r for r in rows if "p_th" in r]
    fit = fit_sustainable([(r["N_cyc"], r["p_th"]) for r in good], [r["p_th_err"] for r in good],
                          n_boot=50, seed=args.seed)
    summary = {"family": args.family, "sizes": args.sizes, "trials": args.trials, "seed": args.seed,
               "thresholds": rows, "fit": fit.to_dict()}
    print(json.dumps(summary["fit"]))
    if args.out:
        with open(args.out, "w") as fh:
            json.dump(summary, fh, indent=1)


if __name__ == "__main__":
    main()
