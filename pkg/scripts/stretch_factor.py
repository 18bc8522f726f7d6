"""Hop-count stretch factor as a function of node intensity."""

import argparse

from connintervals.estimators import estimate_mu


def main():
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--intensities", type=float, nargs="+", default=[1.5, 2.0, 3.0, 6.0])
    p.add_argument("--dmin", type=float, default=20.0)
    p.add_argument("--dmax", type=float, default=100.0)
    p.add_argument("--pairs", type=int, default=500)
    p.add_argument("--replicas", type=int, default=10)
    p.add_argument("--workers", type=int, default=None)
    a = p.parse_args()
    for lam in a.intensities:
        e = estimate_mu(lam, 1.0, distances=(a.dmin, a.dmax), pairs=a.pairs,
                        replicas=a.replicas, workers=a.workers)
        print(f"intensity {lam:g}: mu = {e.value:.3f} +- {e.std_error:.3f} "
              f"({e.settings['pairs']} connected pairs)")


if __name__ == "__main__":
    main()
