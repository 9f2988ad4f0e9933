import numpy as np
import pytest

from hdperc import rng


def test_prefix_property():
    assert np.array_equal(rng.uniforms(7, 10), rng.uniforms(7, 1000)[:10])


def test_streams_and_replicates_differ():
    a = rng.uniforms(1, 1000)
    assert not np.array_equal(a, rng.uniforms(1, 1000, rng.CHAIN))
    assert not np.array_equal(a, rng.uniforms(1, 1000, replicate=1))
    assert np.mean(a != rng.uniforms(2, 1000)) > 0.99


def test_uniform_range_and_mean():
    u = rng.uniforms(3, 100_000)
    assert u.min() >= 0 and u.max() < 1
    assert abs(u.mean() - 0.5) <= 0.01


def test_negative_seed_rejected():
    with pytest.raises(ValueError):
        rng.generator(-1)
