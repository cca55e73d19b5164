"""Sweep-rule invariants and chunk-decomposition bounds on random errors.

    python scripts/lemma_checks.py --invariant-trials 10000 --chunk-trials 1000
"""
import argparse
import json

import numpy as np

from sweepca.lattices import LatticeSpec, build
from sweepca.sweep import SweepConfig
from sweepca.verify import (CellMetric, check_connected_components, check_sweep_invariants,
                            component_levels, decompose_chunks, local_patch_cells,
                            removal_time_oracle, sample_local_error)


def invariants(trials, seed, rule):
    lat = build(LatticeSpec("bcc3d", 8))
    rng = np.random.default_rng(seed)
    fails = {"support": 0, "propagation": 0, "removal": 0, "monotone": 0}
    for _ in range(trials):
        err = sample_local_error(lat, 0.01, 2, rng)
        rep = check_sweep_invariants(lat, lat.syndrome_of(err), SweepConfig(rule=rule))
        for key in fails:
            fails[key] += not getattr(rep, key)
    return fails


def chunks(trials, seed, Q):
    lat = build(LatticeSpec("cubic3d", 16))
    rng = np.random.default_rng(seed)
    out = {"bound_violations": 0, "slow_removals": 0, "components": [0, 0]}
    for trial in range(trials):
        n = int(rng.integers(1, 16))
        if trial % 2:
            cells = rng.choice(lat.num_qubits, n, replace=False)
        else:
            pool = local_patch_cells(lat, int(rng.integers(lat.complex.num_cells(0))), 3)
            cells = rng.choice(pool, min(n, len(pool)), replace=False)
        metric = CellMetric(lat.complex, lat.k, cells)
        dec = decompose_chunks(cells, Q, metric)
        out["bound_violations"] += len(check_connected_components(dec, metric))
        for level, comp in component_levels(dec, metric):
            if level <= 1:
                out["components"][level] += 1
                out["slow_removals"] += not removal_time_oracle(lat, comp, Q, level)
    return out


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--invariant-trials", type=int, default=10_000)
    ap.add_argument("--chunk-trials", type=int, default=1000)
    ap.add_argument("--rule", choices=["sweep", "greedy"], default="sweep")
    ap.add_argument("--Q", type=float, default=36)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    print(json.dumps({"invariants": invariants(args.invariant_trials, args.seed, args.rule),
                      "chunks": chunks(args.chunk_trials, args.seed, args.Q)}, indent=1))


if __name__ == "__main__":
    main()
