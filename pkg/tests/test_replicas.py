import numpy as np
from hypothesis import given
from hypothesis import strategies as st

from connintervals.replicas import RunningMoments, default_workers, replica_map, rng_for


def test_rng_is_counter_based():
    a = rng_for(5, 1, 2).random(3)
    b = rng_for(5, 1, 2).random(3)
    c = rng_for(5, 1, 3).random(3)
    np.testing.assert_array_equal(a, b)
    assert not np.allclose(a, c)


def test_default_workers_env(monkeypatch):
    monkeypatch.setenv("CONNINT_WORKERS", "3")
    assert default_workers() == 3
    monkeypatch.delenv("CONNINT_WORKERS")
    assert default_workers() == 1


def _square(x):
    return x * x


def test_replica_map_order_and_workers():
    assert replica_map(_square, range(10), 1) == [x * x for x in range(10)]
    assert replica_map(_square, range(10), 2) == [x * x for x in range(10)]


@given(st.lists(st.floats(-1e3, 1e3), min_size=2, max_size=50), st.integers(0, 50))
def test_running_moments(xs, cut):
    cut = min(cut, len(xs))
    whole = RunningMoments().extend(xs)
    merged = RunningMoments().extend(xs[:cut]).merge(RunningMoments().extend(xs[cut:]))
    assert np.isclose(whole.mean, np.mean(xs), atol=1e-9)
    assert np.isclose(whole.variance, np.var(xs, ddof=1), rtol=1e-7, atol=1e-6)
    assert np.isclose(merged.mean, whole.mean, atol=1e-9)
    assert np.isclose(merged.variance, whole.variance, rtol=1e-7, atol=1e-6)
