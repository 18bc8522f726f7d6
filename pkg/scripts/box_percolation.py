"""Finite-box percolation probability theta_L against the box side L."""

import argparse

from connintervals.estimators import estimate_theta


def main():
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--intensity", type=float, default=1.5)
    p.add_argument("--L", type=float, nargs="+", default=[5, 10, 20, 40, 50, 80])
    p.add_argument("--replicas", type=int, default=2000)
    p.add_argument("--workers", type=int, default=None)
    a = p.parse_args()
    for L in a.L:
        e = estimate_theta(a.intensity, 1.0, 2 * L + 4, L, a.replicas, workers=a.workers)
        print(f"L={L:g}: theta_L = {e.value:.4f} +- {e.std_error:.4f}")


if __name__ == "__main__":
    main()
