import numpy as np
import pytest

from sqbsde.errors import BlowupError, SpliceError
from sqbsde.paths import BrownianSource, PathPrefix, TimeGrid, concat_paths, euler_forward, simulate_brownian


def test_grid_nodes_end_exactly_at_horizon():
    g = TimeGrid(0.7, 3)
    assert g.points[-1] == 0.7
    assert g.index_of(g.t(2)) == 2
    with pytest.raises(ValueError):
        g.index_of(0.1)


def test_bundle_shape_start_and_increment_variance():
    b = simulate_brownian(TimeGrid(2.0, 10), 50_000, 2, seed=1, x0=[1.0, -1.0])
    assert b.values.shape == (50_000, 11, 2)
    assert np.array_equal(b.values[:, 0], np.broadcast_to([1.0, -1.0], (50_000, 2)))
    var = b.increments().var(axis=0)
    assert np.allclose(var, 0.2, rtol=0.03)


def test_streaming_source_reproduces_bundle_increments():
    grid = TimeGrid(1.0, 8)
    src = BrownianSource(grid, 500, 1, seed=4)
    values = src.bundle().values
    cur = values[:, 0].copy()
    for i in range(grid.M):
        cur = cur + src.increment(i)
        assert np.array_equal(cur, values[:, i + 1])


def test_splice_keeps_prefix_and_freezes_after_tail():
    prefix = PathPrefix(2, np.array([[0.0], [1.0], [2.0]]))
    out = concat_paths(prefix, np.array([[2.0], [3.0]]), n_points=6)
    assert out[:, 0].tolist() == [0.0, 1.0, 2.0, 3.0, 3.0, 3.0]
    with pytest.raises(SpliceError):
        concat_paths(prefix, np.array([[2.5], [3.0]]))


def test_prefix_truncates_future_nodes():
    p = PathPrefix(1, np.arange(5.0))
    assert p.values.shape == (2, 1)


def test_euler_with_zero_vol_solves_linear_ode():
    b = simulate_brownian(TimeGrid(1.0, 1000), 3, 1, seed=0)
    X = euler_forward(lambda t, x: -x[:, -1], lambda t, x: 0.0, b, 1.0)
    assert abs(X.values[0, -1, 0] - np.exp(-1.0)) < 1e-3


def test_euler_blowup_names_path_and_step():
    b = simulate_brownian(TimeGrid(1.0, 5), 3, 1, seed=0)
    with pytest.raises(BlowupError) as err:
        euler_forward(lambda t, x: np.where(t > 0.3, np.inf, 0.0) * np.ones_like(x[:, -1]), None, b, 0.0)
    assert err.value.step == 2
