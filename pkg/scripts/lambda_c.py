"""Critical intensity from the crossing of two spanning-probability curves,
repeated over several seeds to show the seed-to-seed spread."""

import argparse

import numpy as np

from connintervals.estimators import estimate_lambda_c


def main():
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--radius", type=float, default=0.1)
    p.add_argument("--sides", type=float, nargs=2, default=[3.0, 5.0])
    p.add_argument("--replicas", type=int, default=200)
    p.add_argument("--seeds", type=int, default=5)
    p.add_argument("--workers", type=int, default=None)
    a = p.parse_args()
    vals = []
    for seed in range(a.seeds):
        e = estimate_lambda_c(a.radius, tuple(a.sides), replicas=a.replicas, seed=seed,
                              workers=a.workers)
        pts = ", ".join(f"side {q.side:g}: {q.value:.2f}" for q in e.settings["points"])
        print(f"seed {seed}: lambda_c = {e.value:.2f} +- {e.std_error:.2f}  ({pts})")
        vals.append(e.value)
    print(f"mean over seeds {np.mean(vals):.2f}, sd {np.std(vals, ddof=1):.2f}")


if __name__ == "__main__":
    main()
