import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components

from connintervals.estimators import (ScalingParams, _SpanJob, critical_radius,
                                      estimate_lambda_c, estimate_mu, estimate_theta,
                                      resolve_scaling, spanning_curve, spanning_thresholds,
                                      _normal_fit)
from connintervals.geometry import Window, close_pairs, sample_ppp, unit_ball_volume
from connintervals.replicas import STREAMS, rng_for


def test_scaling_example():
    lam, k = resolve_scaling(2.0, 0.5, 1e4, 2.9)
    assert lam == pytest.approx(0.01)
    assert k == round(2.9 * math.sqrt(2.0 / (0.01 * math.pi)))


@given(st.floats(0.1, 20), st.floats(0.05, 1.0), st.floats(10, 1e6), st.floats(1.0, 10.0),
       st.sampled_from([1, 2, 3]))
def test_scaling_roundtrip(n_S, alpha, T, mu, d):
    p = ScalingParams(n_S, alpha, T, mu, d)
    assert p.lambda_S * p.exact_reach ** d * unit_ball_volume(d) == pytest.approx(n_S)
    # rounding k moves the reach by at most half a hop
    assert abs(p.k / mu - p.exact_reach) <= 0.5 / mu + 1e-9 or p.k == 1


def test_scaling_validation():
    with pytest.raises(ValueError):
        ScalingParams(0.0, 0.5, 10.0, 2.0)


@given(st.floats(0.01, 50), st.sampled_from([1, 2, 3]))
def test_critical_radius_identity(n_S, d):
    assert unit_ball_volume(d) * critical_radius(n_S, d) ** d == pytest.approx(n_S)


def test_theta_zero_intensity():
    assert estimate_theta(0.0, 1.0, 20.0, 5.0, 20).value == 0.0


def test_theta_validation():
    with pytest.raises(ValueError):
        estimate_theta(1.5, 1.0, 15.0, 10.0, 10)


def test_theta_decreases_with_box():
    a = estimate_theta(1.5, 1.0, 20.0, 5.0, 400, seed=1)
    b = estimate_theta(1.5, 1.0, 40.0, 10.0, 400, seed=2)
    assert b.value <= a.value + 2 * math.hypot(a.std_error, b.std_error)
    assert 0.5 < b.value < 1.0


@pytest.mark.parametrize("s", [0.5, 2.0])
def test_theta_scale_invariance(s):
    base = estimate_theta(1.5, 1.0, 16.0, 6.0, 200, seed=3)
    scaled = estimate_theta(1.5 / s ** 2, s, 16.0 * s, 6.0 * s, 200, seed=3)
    # identical samples up to floating-point rounding of the rescaled coordinates
    assert abs(scaled.value - base.value) <= 0.02


def brute_threshold(points, marks, r, side, axis, lam_max):
    """Smallest mark level at which some cluster touches both faces."""
    w = Window(points.shape[1], side, "open")
    from connintervals.geometry import PointSet
    order = np.argsort(marks)
    for m in range(1, len(order) + 1):
        keep = order[:m]
        ps = PointSet(points[keep], 1.0, w)
        pr = close_pairs(ps, r)
        g = coo_matrix((np.ones(len(pr)), (pr[:, 0], pr[:, 1])), shape=(m, m)) if len(pr) \
            else coo_matrix((m, m))
        _, lab = connected_components(g, directed=False)
        c = points[keep, axis]
        if set(lab[c <= r]) & set(lab[c >= side - r]):
            return lam_max * marks[order[m - 1]]
    return math.inf


@pytest.mark.parametrize("replica", range(6))
def test_bottleneck_thresholds_match_brute_force(replica):
    lam_max, r, side = 3.0, 1.0, 4.0
    job = _SpanJob(lam_max, r, side, 2, 5, 9)
    got = job(replica)
    rng = rng_for(5, STREAMS["lambda_c"], 9, replica)
    ps = sample_ppp(lam_max, Window(2, side, "open"), rng)
    marks = rng.random(len(ps))
    for ax in range(2):
        assert got[ax] == pytest.approx(brute_threshold(ps.points, marks, r, side, ax, lam_max))


def test_spanning_curves_sharpen_with_window():
    lam_max = 2.5
    widths = []
    for side in (2.0, 3.0, 5.0):
        th = spanning_thresholds(1.0, side, lam_max, 400, seed=1)
        curve = spanning_curve(th, np.linspace(0.5, lam_max, 50))
        assert np.all(np.diff(curve) >= 0)
        widths.append(_normal_fit(th)[1])
    assert widths[0] > widths[1] > widths[2]


def test_lambda_c_radius_scaling():
    a = estimate_lambda_c(1.0, (3.0, 5.0), replicas=60, seed=2, boot=20)
    b = estimate_lambda_c(0.1, (0.3, 0.5), replicas=60, seed=2, boot=20)
    assert b.value * 0.01 == pytest.approx(a.value, rel=1e-6)
    assert a.std_error > 0
    assert 1.0 < a.value < 2.0


def test_lambda_c_needs_two_windows():
    with pytest.raises(ValueError):
        estimate_lambda_c(1.0, (3.0,), replicas=5)


def test_mu_at_least_one():
    est = estimate_mu(1.5, 1.0, distances=(5.0, 15.0), pairs=200, replicas=4, seed=1)
    assert est.value >= 1.0
    assert est.std_error > 0


def test_mu_decreases_with_intensity():
    vals = [estimate_mu(lam, 1.0, distances=(5.0, 15.0), pairs=300, replicas=4, seed=2).value
            for lam in (1.5, 3.0, 6.0)]
    assert vals[0] > vals[1] > vals[2] >= 1.0


def test_mu_radius_invariance():
    a = estimate_mu(1.5, 1.0, distances=(5.0, 15.0), pairs=100, replicas=2, seed=3)
    b = estimate_mu(1.5 / 4, 2.0, distances=(5.0, 15.0), pairs=100, replicas=2, seed=3)
    assert b.value == pytest.approx(a.value, rel=0.02)


def test_mu_validation():
    with pytest.raises(ValueError):
        estimate_mu(1.5, 1.0, window_side=10.0, distances=(5.0, 15.0))
