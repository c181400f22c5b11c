import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from sqbsde.catalog import lookup_catalog
from sqbsde.errors import PreconditionError, TransformDomainError
from sqbsde.global_bsde import (
    forward_transform,
    inverse_transform,
    localize,
    solve_diagonal_quadratic,
    solve_global_lipschitz_g,
    solve_global_superquadratic,
    solve_perturbed,
)
from sqbsde.paths import TimeGrid, simulate_brownian
from sqbsde.regression import FeatureBasis

mats = arrays(np.float64, (5, 2, 3), elements=st.floats(-50, 50))


@given(z=mats, w=mats, r=st.floats(0.01, 20))
@settings(max_examples=60, deadline=None)
def test_localizer_is_a_ball_projection(z, w, r):
    lz, lw = localize(z, r), localize(w, r)
    norms = np.sqrt(np.sum(lz**2, axis=(1, 2)))
    assert np.all(norms <= r * (1 + 1e-12))
    inside = np.sqrt(np.sum(z**2, axis=(1, 2))) <= r
    assert np.array_equal(lz[inside], z[inside])
    d_out = np.sqrt(np.sum((lz - lw) ** 2, axis=(1, 2)))
    d_in = np.sqrt(np.sum((z - w) ** 2, axis=(1, 2)))
    assert np.all(d_out <= d_in + 1e-9)


@given(a=st.floats(0.1, 3) | st.floats(-3, -0.1), y=st.floats(-2, 2), z=st.floats(-5, 5))
@settings(max_examples=60, deadline=None)
def test_exponential_transform_round_trip(a, y, z):
    yb, zb = forward_transform(np.array([a]), np.array([[y]]), np.array([[[z]]]))
    y2, z2 = inverse_transform(np.array([a]), yb, zb)
    assert abs(y2[0, 0] - y) < 1e-12 and abs(z2[0, 0, 0] - z) < 1e-10


def test_inverse_transform_rejects_nonpositive_values():
    with pytest.raises(TransformDomainError):
        inverse_transform(np.array([1.0]), np.array([[0.5], [0.0]]))


@pytest.fixture(scope="module")
def bundle():
    return simulate_brownian(TimeGrid(1.0, 20), 6000, 1, seed=21)


def test_levels_chain_and_certificate(bundle):
    spec = lookup_catalog("sine-terminal", {"shift": 1.0})
    sol = solve_global_lipschitz_g(spec, bundle, basis=FeatureBasis("local-constant", bins=16))
    assert len(sol.levels) == sol.plan.N
    # consecutive levels share their boundary node
    for (lo, _), (_, hi) in zip(sol.levels, sol.levels[1:]):
        assert lo == hi
    assert sol.levels[0][1] == bundle.grid.M and sol.levels[-1][0] == 0
    assert abs(sol.y0()[0] - 0.5103779515445729) < 0.03
    assert sol.certificate["z bound holds at every node"]
    assert "localizer radius" in sol.certificate_text()


def test_horizon_mismatch_is_a_precondition_error(bundle):
    with pytest.raises(PreconditionError):
        solve_global_lipschitz_g(lookup_catalog("affine").with_horizon(0.5), bundle)


def test_superquadratic_route_localizer_stays_inactive(bundle):
    sol = solve_global_superquadratic(lookup_catalog("superquadratic", {"eps": 0.05}), bundle)
    assert sol.certificate["localizer inactive (self-consistent)"]
    assert abs(sol.y0()[0]) < 0.02


def test_diagonal_route_on_the_cole_hopf_problem(bundle):
    sol = solve_diagonal_quadratic(lookup_catalog("quad-1d", {"a": 0.5}), bundle)
    assert sol.certificate["envelope holds for means"]
    assert np.all(np.isfinite(sol.Y))


def test_perturbation_rejection_is_an_outcome(bundle):
    out = solve_perturbed(lookup_catalog("sine-terminal"), lookup_catalog("zero"), 1.0, 1.0, bundle)
    assert not out.accepted and out.solution is None
    assert "rejected" in out.report()


def test_perturbation_accepted_near_the_base(bundle):
    target = lookup_catalog("sine-terminal", {"scale": 0.01})
    out = solve_perturbed(target, lookup_catalog("zero"), 0.25, 0.25, bundle)
    assert out.accepted and out.margin > 0
    assert abs(out.solution.y0()[0]) < 0.01
