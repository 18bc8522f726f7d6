"""Dense-regime means of f1, f2, f3 over an n_S grid.

Writes a CSV with columns n_S, statistic, mean, std_error, replicas.
"""

import argparse

from connintervals.limit_laws import SWEEP_COLUMNS, LimitConfig, figure2_sweep, write_rows
from connintervals.mobility import WaypointLaw


def main():
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--replicas", type=int, default=1000)
    p.add_argument("--L", type=float, default=50.0)
    p.add_argument("--delta", type=float, default=0.5)
    p.add_argument("--M", type=float, default=50.0)
    p.add_argument("--n-S", type=float, nargs="+", default=[0, 0.5, 1, 2, 4, 8])
    p.add_argument("--law", choices=["fixed_jump", "isotropic_normalized"], default="fixed_jump")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--workers", type=int, default=None)
    p.add_argument("-o", "--output", default="figure2.csv")
    a = p.parse_args()
    law = WaypointLaw.fixed(0.05) if a.law == "fixed_jump" else WaypointLaw.normalized()
    cfg = LimitConfig(L=a.L, delta=a.delta, M=a.M, replicas=a.replicas, seed=a.seed, law=law)
    rows = figure2_sweep(cfg, a.n_S, workers=a.workers)
    for n, f, mean, se, _ in rows:
        print(f"n_S={n:<5g} {f}: {mean:.4f} +- {se:.4f}")
    write_rows(a.output, SWEEP_COLUMNS, rows, [f"{k}={v}" for k, v in vars(a).items()])


if __name__ == "__main__":
    main()
