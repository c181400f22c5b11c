import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from sqbsde.catalog import lookup_catalog
from sqbsde.errors import IntegrandError, PreconditionError
from sqbsde.global_bsde import solve_global_lipschitz_g
from sqbsde.measure_change import bmo_norm_estimate, fbsde_residual, fbsde_via_bsde, stochastic_exponential
from sqbsde.paths import TimeGrid, simulate_brownian
from sqbsde.regression import FeatureBasis


@pytest.fixture(scope="module")
def bundle():
    return simulate_brownian(TimeGrid(1.0, 20), 40_000, 1, seed=2)


@given(theta=st.floats(-1.5, 1.5))
@settings(max_examples=10, deadline=None)
def test_constant_integrand_weights_are_exact(theta):
    b = simulate_brownian(TimeGrid(1.0, 5), 50, 1, seed=1)
    w = stochastic_exponential(theta, b)
    exact = np.exp(-theta * b.values[:, -1, 0] - 0.5 * theta**2)
    assert np.allclose(w.weights, exact, rtol=1e-12)


def test_weights_have_unit_mean(bundle):
    theta = 0.5 * np.sin(bundle.values[:, :-1, 0])
    mean, se = stochastic_exponential(theta, bundle).mean_and_se()
    assert abs(mean - 1.0) <= 3 * se


def test_nonfinite_integrand_names_path_and_step(bundle):
    theta = np.zeros((bundle.n_paths, bundle.grid.M))
    theta[7, 4] = np.nan
    with pytest.raises(IntegrandError, match="path 7, step 4"):
        stochastic_exponential(theta, bundle)


def test_bmo_of_a_constant_integrand(bundle):
    assert abs(bmo_norm_estimate(0.3, bundle) - 0.3) < 1e-12


def test_linear_drift_fbsde_residuals_are_small(bundle):
    spec = lookup_catalog("linear-drift")
    train = bundle.subset(10_000)
    sol = solve_global_lipschitz_g(spec, train, basis=FeatureBasis("polynomial", 1))
    fresh = simulate_brownian(TimeGrid(1.0, 20), 10_000, 1, seed=3)
    cand = fbsde_via_bsde(spec, sol, fresh)
    rep = fbsde_residual(cand, spec)
    assert rep.terminal == 0.0
    assert rep.forward < 1e-12
    assert rep.backward < 0.1
    assert abs(cand.bmo - 0.3) < 1e-12


def test_path_basis_cannot_be_frozen(bundle):
    spec = lookup_catalog("linear-drift")
    sol = solve_global_lipschitz_g(spec, bundle.subset(2000), basis=FeatureBasis("path", 1))
    with pytest.raises(PreconditionError):
        fbsde_via_bsde(spec, sol, bundle.subset(2000))
