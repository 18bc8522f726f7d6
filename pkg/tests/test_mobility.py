import numpy as np
import pytest
from scipy import stats

from connintervals.geometry import Window
from connintervals.mobility import (NodeTrace, WaypointLaw, diffusive_rescale_check,
                                    position_at, sample_brownian_path, simulate_ensemble,
                                    simulate_trace)


def test_trace_basic_properties():
    tr = simulate_trace(np.zeros(2), (0.0, 50.0), 2.0, WaypointLaw.fixed(0.1), seed=1)
    assert np.all(np.diff(tr.jump_times) > 0)
    assert tr.jump_times.min() > 0 and tr.jump_times.max() <= 50.0
    np.testing.assert_allclose(np.linalg.norm(tr.displacements, axis=1), 0.1)
    np.testing.assert_array_equal(position_at(tr, 0.0), [0.0, 0.0])


def test_trace_is_deterministic():
    a = simulate_trace(np.zeros(2), (0.0, 10.0), 1.0, WaypointLaw.fixed(0.05), seed=3)
    b = simulate_trace(np.zeros(2), (0.0, 10.0), 1.0, WaypointLaw.fixed(0.05), seed=3)
    np.testing.assert_array_equal(a.jump_times, b.jump_times)
    np.testing.assert_array_equal(a.displacements, b.displacements)


def test_position_is_right_continuous():
    tr = NodeTrace(np.zeros(1), np.array([1.0, 2.0]), np.array([[1.0], [1.0]]), (0.0, 3.0))
    assert position_at(tr, 0.999)[0] == 0.0
    assert position_at(tr, 1.0)[0] == 1.0
    assert position_at(tr, 3.0)[0] == 2.0
    with pytest.raises(ValueError):
        position_at(tr, 3.5)


def test_anchor_time_pins_position():
    tr = simulate_trace(np.array([1.0, 2.0]), (-20.0, 20.0), 1.0, WaypointLaw.fixed(0.3), 5,
                        anchor_time=0.0)
    np.testing.assert_allclose(position_at(tr, 0.0), [1.0, 2.0])


def test_rejects_nonpositive_rate():
    with pytest.raises(ValueError):
        simulate_trace(np.zeros(2), (0.0, 1.0), 0.0, WaypointLaw.fixed(0.1), seed=0)


def test_waiting_times_exponential():
    tr = simulate_trace(np.zeros(2), (0.0, 5000.0), 1.5, WaypointLaw.fixed(0.1), seed=7)
    gaps = np.diff(np.concatenate([[0.0], tr.jump_times]))
    assert stats.kstest(gaps, "expon", args=(0, 1 / 1.5)).pvalue > 0.001


def test_jump_directions_isotropic():
    v = WaypointLaw.fixed(1.0).sample(np.random.default_rng(2), 20_000, 2)
    ang = (np.arctan2(v[:, 1], v[:, 0]) + np.pi) / (2 * np.pi)
    assert stats.kstest(ang, "uniform").pvalue > 0.001
    v3 = WaypointLaw.fixed(1.0).sample(np.random.default_rng(2), 20_000, 3)
    # uniform on the sphere: each coordinate is uniform on [-1, 1]
    assert stats.kstest((v3[:, 2] + 1) / 2, "uniform").pvalue > 0.001


def test_sample_sums_match_explicit_sums():
    law = WaypointLaw.fixed(0.2)
    counts = np.array([0, 1, 5, 40, 3])
    rng = np.random.default_rng(9)
    s = law.sample_sums(rng, counts, 2, chunk=7)
    rng2 = np.random.default_rng(9)
    # replay: the chunks are drawn in order, so concatenated draws give the same sums
    expect = np.zeros((5, 2))
    start = 0
    groups = [[0, 1, 2], [3], [4]]
    for grp in groups:
        tot = counts[grp].sum()
        if tot:
            j = law.sample(rng2, int(tot), 2)
            owner = np.repeat(np.arange(len(grp)), counts[grp])
            for k in range(2):
                expect[grp, k] = np.bincount(owner, weights=j[:, k], minlength=len(grp))
        start += tot
    np.testing.assert_allclose(s, expect)


def test_diffusive_scaling_normalized_law():
    cov = diffusive_rescale_check(WaypointLaw.normalized(), 1.0, 1e4, 10_000, seed=1)
    assert np.max(np.abs(cov - np.eye(2))) < 0.05


def test_diffusive_scaling_fixed_law():
    law = WaypointLaw.fixed(0.05)
    cov = diffusive_rescale_check(law, 1.0, 1e4, 10_000, seed=2)
    target = law.second_moment(2) / 2
    assert np.max(np.abs(cov / target - np.eye(2))) < 0.05


def test_ensemble_replay_matches_traces():
    w = Window(2, 6.0, "periodic")
    ens = simulate_ensemble(2.0, w, (-3.0, 4.0), 1.0, WaypointLaw.fixed(0.4), seed=4)
    for t in (-3.0, -1.2, 0.0, 2.5, 4.0):
        pos = ens.positions_at(t)
        for i in range(0, len(ens), 5):
            np.testing.assert_allclose(pos[i], w.wrap(ens.trace(i).positions_at([t])[0]),
                                       atol=1e-9)


def test_ensemble_stays_uniform():
    w = Window(2, 10.0, "periodic")
    ens = simulate_ensemble(5.0, w, (0.0, 30.0), 1.0, WaypointLaw.normalized(), seed=6)
    pos = ens.positions_at(30.0)
    for k in range(2):
        assert stats.kstest(pos[:, k] / 10.0, "uniform").pvalue > 0.001


def test_ensemble_needs_torus():
    with pytest.raises(ValueError):
        simulate_ensemble(1.0, Window(2, 3.0, "open"), (0, 1), 1.0, WaypointLaw.fixed(0.1), 0)


def test_brownian_path():
    grid = np.linspace(0, 1, 11)
    path = sample_brownian_path(grid, seed=1)
    np.testing.assert_array_equal(path[0], [0.0, 0.0])
    ends = np.array([sample_brownian_path([0.0, 1.0], seed=s)[1] for s in range(4000)])
    assert np.max(np.abs(np.cov(ends, rowvar=False) - np.eye(2))) < 0.1
    with pytest.raises(ValueError):
        sample_brownian_path([1.0, 0.5], seed=0)
