import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from sqbsde.errors import BlowupError, PreconditionError, ReflectionError
from sqbsde.paths import BrownianSource, TimeGrid, simulate_brownian
from sqbsde.reflection import (
    ReflectionSpec,
    reflected_composition_constant,
    reflected_sde,
    sde_lipschitz_map,
    sde_map_constant,
    skorokhod_1d,
    skorokhod_polyhedral,
)

increments = arrays(np.float64, (3, 40), elements=st.floats(-0.5, 0.5))


def _wedge():
    th = math.radians(30.0)
    normals = np.array([[1.0, 0.0], [-math.sin(th), math.cos(th)]])
    dirs = np.array([[1.0, 0.3], [0.2, 1.0]])
    dirs /= np.linalg.norm(dirs, axis=1)[:, None]
    return ReflectionSpec(normals, np.zeros(2), dirs)


@given(inc=increments, lo=st.floats(-1, 0), width=st.floats(0.1, 2))
@settings(max_examples=50, deadline=None)
def test_interval_map_stays_inside_and_pushes_only_at_barriers(inc, lo, width):
    hi = lo + width
    start = lo + width / 2
    path = start + np.concatenate([np.zeros((3, 1)), np.cumsum(inc, axis=1)], axis=1)
    out = skorokhod_1d(path, lo, hi)
    assert np.all(out.values >= lo) and np.all(out.values <= hi)
    dpsi = np.diff(out.regulator, axis=1)
    up, down = dpsi > 0, dpsi < 0
    assert np.all(out.values[:, 1:][up] == lo)
    assert np.all(out.values[:, 1:][down] == hi)
    assert np.allclose(out.values, path + out.regulator, atol=1e-12)


@given(inc=increments)
@settings(max_examples=30, deadline=None)
def test_one_sided_map_is_the_running_maximum_formula(inc):
    path = np.concatenate([np.zeros((3, 1)), np.cumsum(inc, axis=1)], axis=1)
    out = skorokhod_1d(path, 0.0)
    psi = np.maximum.accumulate(np.maximum(-path, 0.0), axis=1)
    assert np.allclose(out.regulator, psi, atol=1e-12)


def test_path_inside_is_left_alone():
    path = np.array([[0.5, 0.6, 0.4, 0.55]])
    out = skorokhod_1d(path, 0.0, 1.0)
    assert np.array_equal(out.values, path) and np.all(out.l == 0)


def test_start_outside_is_rejected():
    with pytest.raises(ReflectionError):
        skorokhod_1d(np.array([[1.5, 0.2]]), 0.0, 1.0)


def test_spec_validation_flags():
    assert ReflectionSpec.interval(0.0, 1.0).valid
    w = _wedge()
    assert w.cond_i and w.cond_ii and w.cond_iii
    a = math.radians(30)
    v = np.array([[1.0, 0.3], [-0.2, -1.0]])
    v /= np.linalg.norm(v, axis=1)[:, None]
    skew = ReflectionSpec([[0.0, 1.0], [math.sin(a), -math.cos(a)]], [0.0, 0.0], v)
    assert not skew.cond_i and not skew.valid
    with pytest.raises(ReflectionError, match="not all satisfied"):
        skorokhod_polyhedral(np.ones((3, 2)), skew)
    with pytest.raises(ReflectionError):
        ReflectionSpec([[2.0, 0.0]], [0.0])
    with pytest.raises(ReflectionError):
        ReflectionSpec([[1.0, 0.0]], [0.0], [[-1.0, 0.0]])


def test_wedge_map_one_sided_and_complementary():
    spec = _wedge()
    b = simulate_brownian(TimeGrid(1.0, 200), 200, 2, seed=8, x0=[1.0, 1.0])
    out = skorokhod_polyhedral(b.values, spec)
    slack = spec.slack(out.values.reshape(-1, 2))
    assert np.min(slack) >= -1e-12
    # the regulator moves only on steps that end on the boundary
    moved = out.dl > 0
    ends = spec.boundary_distance(out.values[:, 1:].reshape(-1, 2)).reshape(moved.shape)
    assert np.all(ends[moved] <= 1e-9)


def test_free_domain_reproduces_the_sde_map_bitwise():
    grid = TimeGrid(1.0, 50)
    b = simulate_brownian(grid, 100, 1, seed=3)

    def drift(t, phi, m):
        return -phi[:, -1] + 0.5 * np.sin(m[:, -1])

    phi = sde_lipschitz_map(drift, lambda t: 0.5 + 0.25 * t, b, [0.0])
    ref, _ = reflected_sde(drift, lambda t: 0.5 + 0.25 * t, ReflectionSpec.free(1), b, [0.0])
    assert np.array_equal(phi.values, ref.values)


def test_streaming_equals_materialized_for_markovian_drift():
    grid = TimeGrid(1.0, 40)
    src = BrownianSource(grid, 300, 1, seed=6)
    spec = ReflectionSpec.interval(0.0, 1.0)
    drift = lambda t, phi, m: -0.5 * phi[:, -1]
    a, _ = reflected_sde(drift, None, spec, src, [0.5], record_stride=4, markovian=True)
    b, _ = reflected_sde(drift, None, spec, src.bundle(), [0.5])
    # the materialized route differences cumulative values, so agreement is to rounding
    assert np.allclose(a.values, b.values[:, ::4], rtol=0, atol=1e-13)
    with pytest.raises(PreconditionError):
        reflected_sde(drift, None, spec, src, [0.5])


def test_lipschitz_constants():
    assert sde_map_constant(1.0, 1.0) == pytest.approx(2 * math.e)
    assert reflected_composition_constant(1.0, 1.0, 1.0) == pytest.approx(2 * math.e)
    assert reflected_composition_constant(1.0, 1.0, 2.0) == pytest.approx(4 * math.exp(2))


def test_blowup_reports_the_step():
    b = simulate_brownian(TimeGrid(1.0, 10), 4, 1, seed=0)
    with pytest.raises(BlowupError):
        sde_lipschitz_map(lambda t, phi, m: np.full((4, 1), np.inf if t > 0.25 else 0.0), None, b, [0.0])


def test_reflected_csv(tmp_path):
    out = skorokhod_1d(np.array([[0.5, 1.2, 0.3]]), 0.0, 1.0)
    p = tmp_path / "r.csv"
    out.to_csv(p)
    lines = p.read_text().splitlines()
    assert lines[0] == "path,t,x1,l" and len(lines) == 4
