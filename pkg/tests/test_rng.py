import numpy as np
from hypothesis import given, settings, strategies as st

from sqbsde import rng


@given(seed=st.integers(0, 2**32), step=st.integers(0, 500), n=st.integers(1, 3000))
@settings(max_examples=30, deadline=None)
def test_normals_are_pure_functions_of_their_arguments(seed, step, n):
    a = rng.normals(seed, 0, step, n, 2)
    b = rng.normals(seed, 0, step, n, 2)
    assert np.array_equal(a, b)


def test_worker_count_does_not_change_draws():
    one = rng.normals(5, 0, 3, 10_000, 3, workers=1)
    many = rng.normals(5, 0, 3, 10_000, 3, workers=4)
    assert np.array_equal(one, many)


def test_prefix_of_a_larger_draw_is_the_smaller_draw():
    big = rng.normals(2, 1, 0, 5000, 1)
    small = rng.normals(2, 1, 0, 1234, 1)
    assert np.array_equal(big[:1234], small)


def test_streams_and_steps_are_independent_sequences():
    a = rng.normals(1, 0, 0, 2000, 1)
    b = rng.normals(1, 1, 0, 2000, 1)
    c = rng.normals(1, 0, 1, 2000, 1)
    assert not np.array_equal(a, b) and not np.array_equal(a, c)
    assert abs(np.corrcoef(a[:, 0], b[:, 0])[0, 1]) < 0.1


def test_normal_moments():
    z = rng.normals(0, 0, 0, 200_000, 1)[:, 0]
    assert abs(z.mean()) < 0.01
    assert abs(z.var() - 1.0) < 0.01


@given(st.integers(0, 2**31), st.integers(1, 5000))
@settings(max_examples=25, deadline=None)
def test_uniforms_stay_open_unit_interval(seed, n):
    u = rng.uniforms(seed, 0, 0, 0, 0, n)
    assert np.all(u > 0) and np.all(u < 1)


@given(st.lists(st.floats(-1e6, 1e6), min_size=1, max_size=3000))
@settings(max_examples=30, deadline=None)
def test_chunked_sum_matches_exact_sum(values):
    x = np.asarray(values)
    assert np.isclose(rng.chunked_sum(x), np.sum(x), rtol=1e-9, atol=1e-6)


def test_chunked_gram_matches_matmul():
    a = rng.normals(3, 0, 0, 9000, 4)
    assert np.allclose(rng.chunked_gram(a), a.T @ a, rtol=1e-12)
