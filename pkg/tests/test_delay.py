from __future__ import annotations

import numpy as np
import pytest

from packetsync.delay import DelayModel, RngStream, sample, stream_for


def test_zero_variance_returns_mean_exactly():
    rng = RngStream(1, 1)
    assert sample(DelayModel(349e-6), rng) == 349e-6
    assert sample(DelayModel(514e-6), rng) == 514e-6


def test_sample_mean_converges():
    # law of large numbers: 1e5 draws at sigma=10us pin the mean well inside 0.5us
    model = DelayModel(mean=100e-6, variance=(10e-6) ** 2)
    rng = RngStream(7, 0)
    draws = np.array([sample(model, rng) for _ in range(10**5)])
    assert abs(draws.mean() - 100e-6) < 0.5e-6


def test_sample_std_converges():
    model = DelayModel(mean=100e-6, variance=(10e-6) ** 2)
    rng = RngStream(8, 0)
    draws = np.array([sample(model, rng) for _ in range(10**5)])
    # 3-sigma band for the sample std at n=1e5
    assert abs(draws.std() - 10e-6) < 3 * 10e-6 / np.sqrt(2 * 10**5)


def test_samples_respect_floor():
    model = DelayModel(mean=50e-6, variance=(100e-6) ** 2, floor=10e-6)
    rng = RngStream(9, 0)
    draws = [sample(model, rng) for _ in range(5000)]
    assert min(draws) >= 10e-6
    assert any(d == 10e-6 for d in draws)  # truncation actually kicked in


def test_replay_is_byte_identical():
    rng = RngStream(123456789, 42)
    first = rng.normals(0.0, 1.0, 1000)
    second = rng.replay().normals(0.0, 1.0, 1000)
    assert np.array_equal(first, second)


def test_distinct_streams_differ():
    a = RngStream(5, 0).normals(0.0, 1.0, 100)
    b = RngStream(5, 1).normals(0.0, 1.0, 100)
    assert not np.array_equal(a, b)


def test_stream_for_is_stable_per_node_and_source():
    s1 = stream_for(99, "node-a", "kappa")
    s2 = stream_for(99, "node-a", "kappa")
    assert s1.stream_id == s2.stream_id
    assert np.array_equal(s1.normals(0, 1, 10), s2.normals(0, 1, 10))
    assert stream_for(99, "node-a", "eta").stream_id != s1.stream_id
    assert stream_for(99, "node-b", "kappa").stream_id != s1.stream_id


def test_model_validation():
    with pytest.raises(ValueError):
        DelayModel(mean=-1e-6)
    with pytest.raises(ValueError):
        DelayModel(mean=1e-6, variance=-1.0)
    with pytest.raises(ValueError):
        DelayModel(mean=1e-6, floor=2e-6)
    with pytest.raises(ValueError):
        RngStream(-1)
