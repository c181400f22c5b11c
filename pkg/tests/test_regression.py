import numpy as np
import pytest

from sqbsde.catalog import lookup_catalog
from sqbsde.paths import TimeGrid, simulate_brownian
from sqbsde.regression import FeatureBasis, conditional_expectation, solve_lipschitz_bsde, z_bound


@pytest.mark.parametrize("kind,degree,m,count", [("polynomial", 2, 1, 3), ("polynomial", 2, 2, 6),
                                                 ("path", 2, 1, 7), ("path", 1, 2, 7),
                                                 ("local-constant", 0, 1, 64)])
def test_feature_counts(kind, degree, m, count):
    assert FeatureBasis(kind, degree).n_features(m) == count


def test_unknown_basis_kind_rejected():
    with pytest.raises(ValueError):
        FeatureBasis("splines")


def test_quadratic_regression_recovers_conditional_second_moment():
    b = simulate_brownian(TimeGrid(1.0, 4), 20_000, 1, seed=9)
    target = b.values[:, -1, 0] ** 2
    fit = conditional_expectation(b.values, b.grid.delta, 2, target, FeatureBasis("polynomial", 2))
    exact = b.values[:, 2, 0] ** 2 + 0.5
    assert np.sqrt(np.mean((fit - exact) ** 2)) < 0.05


def test_zero_problem_gives_exact_zeros(small_bundle):
    sol = solve_lipschitz_bsde(lookup_catalog("zero"), small_bundle)
    assert np.all(sol.Y == 0) and np.all(sol.Z == 0)


def test_affine_closed_form(small_bundle):
    sol = solve_lipschitz_bsde(lookup_catalog("affine", {"c": 0.5}), small_bundle)
    # Y = W_t + c (T - t), Z = 1
    assert abs(sol.y0()[0] - 0.5) < 0.02
    assert abs(np.mean(sol.Z) - 1.0) < 0.02
    assert sol.gap <= 1e-6


def test_sine_terminal_against_frozen_quadrature(small_bundle):
    spec = lookup_catalog("sine-terminal", {"shift": 1.0})
    sol = solve_lipschitz_bsde(spec, small_bundle)
    assert abs(sol.y0()[0] - 0.5103779515445729) < 0.03


def test_solution_is_seed_deterministic():
    spec = lookup_catalog("lipschitz-mixed")
    a = solve_lipschitz_bsde(spec, simulate_brownian(TimeGrid(1.0, 10), 2000, 1, seed=5), FeatureBasis("path", 1))
    b = solve_lipschitz_bsde(spec, simulate_brownian(TimeGrid(1.0, 10), 2000, 1, seed=5), FeatureBasis("path", 1))
    assert np.array_equal(a.Y, b.Y) and np.array_equal(a.Z, b.Z)


def test_csv_columns(tmp_path, small_bundle):
    spec = lookup_catalog("affine")
    sol = solve_lipschitz_bsde(spec, small_bundle)
    out = tmp_path / "s.csv"
    sol.to_csv(out, z_bound(spec))
    head = out.read_text().splitlines()[0]
    assert head == "t,Y1_mean,Y1_std,absZ_mean,absZ_max,sqrt_rho_bound"
    assert len(out.read_text().splitlines()) == small_bundle.grid.M + 2
