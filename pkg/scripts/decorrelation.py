"""Covariance of the finite-range interval length at times 0 and tT,
for a range of horizons T and sink exponents alpha."""

import argparse

from connintervals.timeline import DecorrelationConfig, decorrelation_diagnostic


def main():
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--T", type=float, nargs="+", default=[1e2, 1e3, 1e4])
    p.add_argument("--alpha", type=float, nargs="+", default=[0.25, 0.5])
    p.add_argument("--t-frac", type=float, default=0.5)
    p.add_argument("--replicas", type=int, default=400)
    p.add_argument("--workers", type=int, default=None)
    a = p.parse_args()
    for alpha in a.alpha:
        for T in a.T:
            c = decorrelation_diagnostic(DecorrelationConfig(T=T, alpha=alpha), a.t_frac,
                                         a.replicas, workers=a.workers)
            print(f"alpha={alpha:g} T={T:g}: cov = {c.value:.4f} +- {c.std_error:.4f}")


if __name__ == "__main__":
    main()
