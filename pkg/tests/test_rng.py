"""Substream alignment and determinism of the counter-based RNG layer."""

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from rateless_dmt import rng


def test_trial_windows_match_single_trial_streams():
    # Trial t drawn inside a batch equals trial t drawn on its own.
    key = rng.stream_key(99, 3)
    batch = rng.trial_uniforms(key, 7, start_trial=0, n_trials=16)
    for t in range(16):
        single = rng.trial_uniforms(key, 7, start_trial=t, n_trials=1)
        assert np.array_equal(batch[t], single[0])


def test_any_chunk_split_reproduces_the_full_run():
    key = rng.stream_key(5)
    full = rng.trial_uniforms(key, 5, 0, 100)
    for split in (1, 7, 33, 64):
        parts = [rng.trial_uniforms(key, 5, t0, n) for t0, n in rng.chunk_ranges(100, split)]
        assert np.array_equal(np.vstack(parts), full)


def test_distinct_streams_disagree():
    a = rng.trial_uniforms(rng.stream_key(1, 0), 4, 0, 8)
    b = rng.trial_uniforms(rng.stream_key(1, 1), 4, 0, 8)
    c = rng.trial_uniforms(rng.stream_key(2, 0), 4, 0, 8)
    assert not np.array_equal(a, b)
    assert not np.array_equal(a, c)


@given(st.integers(min_value=1, max_value=64))
def test_blocks_per_trial_is_ceiling(u):
    b = rng.blocks_per_trial(u)
    assert (b - 1) * rng.UNIFORMS_PER_BLOCK < u <= b * rng.UNIFORMS_PER_BLOCK


def test_blocks_per_trial_rejects_zero():
    with pytest.raises(ValueError):
        rng.blocks_per_trial(0)


def test_standard_normals_moments():
    u = rng.trial_uniforms(rng.stream_key(11), 8, 0, 25_000)
    z = rng.standard_normals(u).ravel()
    n = len(z)
    assert abs(z.mean()) < 4.0 / np.sqrt(n)
    assert abs(z.std() - 1.0) < 4.0 / np.sqrt(n)


def test_standard_normals_needs_even_width():
    with pytest.raises(ValueError):
        rng.standard_normals(np.zeros((3, 5)))


def test_complex_normals_unit_variance():
    u = rng.trial_uniforms(rng.stream_key(12), 8, 0, 50_000)
    z = rng.complex_normals(u).ravel()
    n = len(z)
    # CN(0,1): total power 1, split evenly between components
    assert abs(np.mean(np.abs(z) ** 2) - 1.0) < 4.0 / np.sqrt(n)
    assert abs(np.var(z.real) - 0.5) < 4.0 / np.sqrt(n)
    assert abs(np.var(z.imag) - 0.5) < 4.0 / np.sqrt(n)


def test_map_chunks_order_and_workers():
    def fn(t0, n):
        return np.array([t0, n])

    seq = rng.map_chunks(fn, 10, chunk=3, workers=1)
    par = rng.map_chunks(fn, 10, chunk=3, workers=4)
    assert [tuple(x) for x in seq] == [(0, 3), (3, 3), (6, 3), (9, 1)]
    assert all(np.array_equal(a, b) for a, b in zip(seq, par))


def test_chunk_ranges_rejects_bad_chunk():
    with pytest.raises(ValueError):
        list(rng.chunk_ranges(10, 0))
