import numpy as np
import pytest

from sqbsde.catalog import lookup_catalog
from sqbsde.errors import DivergenceError
from sqbsde.fbsde_local import contraction_constant, solve_local_fbsde, triple_gap
from sqbsde.paths import PathPrefix, TimeGrid, simulate_brownian


@pytest.fixture(scope="module")
def solved():
    spec = lookup_catalog("affine-coupled").with_horizon(0.1)
    bundle = simulate_brownian(TimeGrid(0.1, 10), 3000, 1, seed=3)
    return spec, bundle, solve_local_fbsde(spec, 0.0, np.zeros((1, 1)), bundle, tol=1e-10)


def test_discrete_fixed_point_identity(solved):
    # with an intercept in every regression the mean of Y is constant in time,
    # so the fixed point satisfies Y0 = (cT + mean W_T) / (1 - kappa T)
    spec, bundle, sol = solved
    wbar = float(np.mean(bundle.values[:, -1, 0]))
    assert sol.converged
    assert abs(float(np.mean(sol.Y[:, 0])) - (0.2 * 0.1 + wbar) / 0.9) < 1e-9


def test_measured_ratios_respect_the_contraction_constant(solved):
    spec, _, sol = solved
    assert max(sol.ratios) <= contraction_constant(spec, 0.1)


def test_triple_gap_of_identical_triples_is_zero(solved):
    _, bundle, sol = solved
    trip = (sol.X, sol.Y, sol.Z)
    assert triple_gap(trip, trip, 0, bundle.grid.delta) == (0.0, 0.0, 0.0)


def test_prefix_is_respected():
    spec = lookup_catalog("affine-coupled").with_horizon(0.1)
    bundle = simulate_brownian(TimeGrid(0.2, 20), 2000, 1, seed=4)
    prefix = PathPrefix(10, np.linspace(0, 0.3, 11))
    sol = solve_local_fbsde(spec.with_horizon(0.2), 0.1, prefix, bundle, tol=1e-8)
    assert np.array_equal(sol.X[0, :11, 0], prefix.values[:, 0])
    assert np.all(sol.X[:, 10, 0] == 0.3)
    assert sol.converged


def test_strong_coupling_diverges_with_a_typed_error():
    spec = lookup_catalog("affine-coupled", {"kappa": 12.0}).with_horizon(1.0)
    bundle = simulate_brownian(TimeGrid(1.0, 10), 1000, 1, seed=4)
    with pytest.raises(DivergenceError):
        solve_local_fbsde(spec, 0.0, np.zeros((1, 1)), bundle, tol=1e-8, max_iter=40)
