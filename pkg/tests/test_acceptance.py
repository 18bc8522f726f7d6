"""End-to-end acceptance checks at their stated tolerances.

Each test prints one ``PASS`` / ``FAIL`` line before asserting. These are
the slow runs (the whole module takes tens of minutes on one core); select
or skip them with ``-m acceptance`` / ``-m "not acceptance"``.
"""

import csv
import itertools
import math

import numpy as np
import pytest
from scipy import stats

from connintervals.cli import run
from connintervals.intervals import IntervalSet, intersect, union
from connintervals.limit_laws import (LimitConfig, critical_counts, draws_for_counts,
                                      estimate_regime_statistic, figure2_sweep,
                                      refinement_samples)
from connintervals.mobility import WaypointLaw, diffusive_rescale_check
from connintervals.timeline import (DecorrelationConfig, build_measure,
                                    decorrelation_diagnostic, evaluate_statistic)

pytestmark = [pytest.mark.acceptance, pytest.mark.slow]

FIG2_GRID = (2.0, 4.0, 8.0)
FIG2_REPLICAS = 1000


@pytest.fixture
def report(capsys):
    def _report(label, ok, detail):
        with capsys.disabled():
            print(f"\n[{'PASS' if ok else 'FAIL'}] {label}: {detail}")
        assert ok, f"{label}: {detail}"
    return _report


def read_estimates(path):
    with open(path) as fh:
        rows = csv.DictReader(ln for ln in fh if not ln.startswith("#"))
        return {r["parameter"]: (float(r["estimate"]), float(r["std_error"])) for r in rows}


@pytest.fixture(scope="module")
def figure2_rows():
    cfg = LimitConfig(L=50.0, delta=0.5, M=50.0, replicas=FIG2_REPLICAS, seed=0)
    rows = figure2_sweep(cfg, FIG2_GRID, ("f1", "f3"))
    return {(n, f): (mean, se) for n, f, mean, se, _ in rows}


@pytest.fixture(scope="module")
def theta_hat(tmp_path_factory):
    out = tmp_path_factory.mktemp("theta") / "theta.csv"
    assert run(["estimate-theta", "--L", "50", "--replicas", "2000", "-o", str(out)]) == 0
    return read_estimates(out)["theta_L"]


def test_criterion_1_lambda_c(tmp_path, report):
    out = tmp_path / "lc.csv"
    assert run(["estimate-lambda-c", "--radius", "0.1", "--replicas", "200",
                "-o", str(out)]) == 0
    value, se = read_estimates(out)["lambda_c"]
    report("criterion 1 (lambda_c at r=0.1 within 143.7 +- 5)", abs(value - 143.7) <= 5,
           f"estimate {value:.2f} +- {se:.2f}")


def test_criterion_2_mu(tmp_path, report):
    out = tmp_path / "mu.csv"
    assert run(["estimate-mu", "--intensity", "1.5", "--radius", "1", "--set", "mu.pairs=500",
                "--set", "mu.distance_max=100", "-o", str(out)]) == 0
    value, se = read_estimates(out)["mu"]
    report("criterion 2 (stretch factor within 8.1 +- 0.8)", abs(value - 8.1) <= 0.8,
           f"estimate {value:.3f} +- {se:.3f}")


def test_criterion_3_f1_saturation(figure2_rows, report):
    vals = [figure2_rows[(n, "f1")] for n in FIG2_GRID]
    in_band = all(0.55 <= m <= 0.65 for m, _ in vals)
    flat = all(abs(a[0] - b[0]) <= 2 * math.hypot(a[1], b[1])
               for a, b in itertools.combinations(vals, 2))
    detail = ", ".join(f"n_S={n:g}: {m:.4f} +- {s:.4f}" for n, (m, s) in zip(FIG2_GRID, vals))
    report("criterion 3 (f1 in [0.55, 0.65] and flat within 2 SE)", in_band and flat,
           f"{detail}; band={'ok' if in_band else 'missed'} flat={'ok' if flat else 'no'}")


def test_criterion_4_f3_plateau(figure2_rows, report):
    vals = [figure2_rows[(n, "f3")] for n in FIG2_GRID]
    ok = all(0.06 <= m <= 0.09 for m, _ in vals)
    detail = ", ".join(f"n_S={n:g}: {m:.4f} +- {s:.4f}" for n, (m, s) in zip(FIG2_GRID, vals))
    report("criterion 4 (f3 plateau in [0.06, 0.09])", ok, detail)


def test_criterion_5_saturation_matches_theta(figure2_rows, theta_hat, report):
    sat, sat_se = figure2_rows[(FIG2_GRID[-1], "f1")]
    th, th_se = theta_hat
    report("criterion 5 (|f1 saturation - theta_L| <= 0.05)", abs(sat - th) <= 0.05,
           f"saturation {sat:.4f} +- {sat_se:.4f}, theta_L {th:.4f} +- {th_se:.4f}")


def _random_set(rng):
    n = rng.integers(0, 6)
    a = rng.integers(0, 40, n) / 4
    b = a + rng.integers(0, 12, n) / 4
    return IntervalSet(tuple(zip(a, b)))


def test_criterion_6a_interval_algebra(report):
    rng = np.random.default_rng(0)
    probe = np.arange(-2, 110) / 8
    bad = 0
    for _ in range(10_000):
        a, b = _random_set(rng), _random_set(rng)
        ma, mb = a.contains_array(probe), b.contains_array(probe)
        bad += int(np.any(union(a, b).contains_array(probe) != (ma | mb)))
        bad += int(np.any(intersect(a, b).contains_array(probe) != (ma & mb)))
    report("criterion 6 (interval algebra vs pointwise oracle, 1e4 cases)", bad == 0,
           f"{bad} mismatches")


def test_criterion_6b_measure_identities(report):
    rng = np.random.default_rng(1)
    T = 12.0
    worst = 0.0
    for _ in range(2000):
        xi = truncate_inside(_random_set(rng), T)
        m = build_measure(xi, T)
        frac = sum(b - a for a, b in xi) / T
        worst = max(worst, abs(evaluate_statistic(m, "f1") - frac),
                    abs(T * evaluate_statistic(m, "f3") - len(xi)))
    report("criterion 6 (total mass = connected fraction, T tau(f3) = interval count)",
           worst < 1e-12, f"max deviation {worst:.2e}")


def truncate_inside(xi, T):
    return IntervalSet(tuple((a, b) for a, b in xi if b <= T and b > a))


SMALL = dict(L=4.0, delta=0.5, M=2.0, replicas=1000, law=WaypointLaw.fixed(0.3), n_S=1.5)


def test_criterion_6c_tower_property(report):
    table = estimate_regime_statistic(LimitConfig(regime="sparse", **SMALL), "f2")
    dense = estimate_regime_statistic(LimitConfig(regime="dense", **SMALL), "f2")
    se = math.hypot(table.mixture.std_error, dense.std_error)
    gap = abs(table.mixture.value - dense.value)
    report("criterion 6 (dense = Poisson-mixed sparse within 3 SE)", gap <= 3 * se,
           f"dense {dense.value:.4f}, mixture {table.mixture.value:.4f}, gap {gap:.4f}, "
           f"3 SE {3 * se:.4f}")


def test_criterion_6d_coupling_monotone(report):
    cfg = LimitConfig(**SMALL)
    counts = [0, 1, 2, 3, 4, 6, 8]
    violations = 0
    for rep in range(1000):
        ells = [s.ell for s in draws_for_counts(cfg, rep, counts)]
        violations += sum(x > y for x, y in zip(ells, ells[1:]))
    report("criterion 6 (I_o(N) nondecreasing in N, 1e3 coupled draws)", violations == 0,
           f"{violations} violations")


def test_criterion_6e_critical_poisson(report):
    n_S = 2.0
    x = np.array([critical_counts(n_S, 20, 0, i)[10] for i in range(3000)])
    top = 7
    obs = np.bincount(np.minimum(x, top), minlength=top + 1)
    p = stats.poisson.pmf(np.arange(top), n_S)
    p = np.append(p, 1 - p.sum())
    pval = stats.chisquare(obs, p * x.size).pvalue
    report("criterion 6 (critical sink count Poisson, chi-square at 1%)", pval > 0.01,
           f"p-value {pval:.3f}")


def test_criterion_6f_diffusive_scaling(report):
    cov = diffusive_rescale_check(WaypointLaw.normalized(), 1.0, 1e4, 10_000, seed=0)
    dev = float(np.max(np.abs(cov - np.eye(2))))
    report("criterion 6 (rescaled endpoint covariance within 0.05 of I)", dev <= 0.05,
           f"max entry deviation {dev:.4f}")


def test_criterion_6g_determinism(tmp_path, report):
    args = ["figure2", "--replicas", "20", "--L", "10", "--M", "5"]
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    assert run(args + ["-o", str(a)]) == 0
    assert run(args + ["-o", str(b)]) == 0
    strip = lambda p: [ln for ln in p.read_text().splitlines() if not ln.startswith("# run.output")]
    report("criterion 6 (two identical runs diff-clean)", strip(a) == strip(b),
           "outputs identical" if strip(a) == strip(b) else "outputs differ")


def test_criterion_7_refinement_stability(report):
    cfg = LimitConfig(L=10.0, delta=0.1, M=2.0, n_S=2.0, law=WaypointLaw.normalized(),
                      replicas=10_000, seed=0)
    coarse, fine = refinement_samples(cfg)
    ks = stats.ks_2samp(coarse, fine).statistic
    report("criterion 7 (KS distance (delta,M,L) vs (delta/2,2M,2L) < 0.02)", ks < 0.02,
           f"KS {ks:.4f} over {coarse.size} coupled replicas")


def test_decorrelation_trend(report):
    covs = []
    for T in (1e2, 1e3, 1e4):
        c = decorrelation_diagnostic(DecorrelationConfig(T=T), 0.5, 400, seed=0)
        covs.append(c)
    mags = [abs(c.value) for c in covs]
    ok = mags[0] > mags[1] > mags[2]
    detail = ", ".join(f"T={T:g}: {c.value:.4f} +- {c.std_error:.4f}"
                       for T, c in zip((1e2, 1e3, 1e4), covs))
    report("decorrelation trend (|cov| decreasing over T)", ok, detail)
