"""Perfect-measurement threshold on bcc as a function of the decoder budget T_max.

    python scripts/tmax_sensitivity.py --trials 1000 --multipliers 4 8 24
"""
import argparse
import json

import numpy as np

from sweepca.lattices import LatticeSpec
from sweepca.montecarlo import estimate_curve, find_threshold


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--sizes", type=int, nargs="+", default=[8, 12, 16])
    ap.add_argument("--multipliers", type=int, nargs="+", default=[4, 8, 24],
                    help="T_max = multiplier * L")
    ap.add_argument("--trials", type=int, default=1000)
    ap.add_argument("--seed", type=int, default=3)
    ap.add_argument("--workers", type=int, default=None)
    args = ap.parse_args()
    ps = np.round(np.arange(0.072, 0.0901, 0.003), 6)
    for m in args.multipliers:
        curves = [estimate_curve(LatticeSpec("bcc3d", L), ps, 1, args.trials, args.seed, L_idx=i,
                                 tmax=m * L, workers=args.workers)
                  for i, L in enumerate(args.sizes)]
        est = find_threshold(curves, n_boot=100)
        print(json.dumps({"tmax_per_L": m, "p_th": est.p_th, "p_th_err": est.p_th_err, "nu": est.nu,
                          "rates": {c.L: c.rates.tolist() for c in curves}}), flush=True)


if __name__ == "__main__":
    main()
