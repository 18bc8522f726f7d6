"""Kolmogorov distance between coupled interval-length samples at
(delta, M, L) and (delta/2, 2M, 2L), over several base settings."""

import argparse

from scipy import stats

from connintervals.limit_laws import LimitConfig, refinement_samples
from connintervals.mobility import WaypointLaw

SETTINGS = [(10.0, 0.1, 2.0), (20.0, 0.1, 5.0), (10.0, 0.5, 20.0)]


def main():
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--replicas", type=int, default=2000)
    p.add_argument("--law", choices=["fixed_jump", "isotropic_normalized"],
                   default="isotropic_normalized")
    p.add_argument("--workers", type=int, default=None)
    a = p.parse_args()
    law = WaypointLaw.fixed(0.05) if a.law == "fixed_jump" else WaypointLaw.normalized()
    for L, delta, M in SETTINGS:
        cfg = LimitConfig(L=L, delta=delta, M=M, law=law, replicas=a.replicas)
        c, f = refinement_samples(cfg, a.workers)
        ks = stats.ks_2samp(c, f).statistic
        print(f"L={L:g} delta={delta:g} M={M:g}: KS = {ks:.4f}, "
              f"P(connected) {float((c > 0).mean()):.3f} -> {float((f > 0).mean()):.3f}")


if __name__ == "__main__":
    main()
