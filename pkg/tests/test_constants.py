import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from sqbsde import constants as cst
from sqbsde import oracles
from sqbsde.catalog import lookup_catalog
from sqbsde.errors import PlannerOverflowError

pos = st.floats(0.0, 3.0)


@given(x=st.floats(0.0, 2.0), K=pos, C=st.floats(0.0, 3.0))
@settings(max_examples=60, deadline=None)
def test_rho_agrees_with_decimal_route(x, K, C):
    ref = float(oracles.dec_rho(x, K, C))
    assert abs(cst.rho(x, K, C) - ref) <= 1e-13 * max(1.0, ref)


def test_rho_at_zero_is_k_exactly():
    for K in (0.0, 0.1, 1.0, 17.25):
        assert cst.rho(0.0, K, 2.0) == K


@given(x=st.floats(0.0, 1.0), K=pos, C=pos, Cg=pos)
@settings(max_examples=60, deadline=None)
def test_rho_fb_agrees_with_decimal_route(x, K, C, Cg):
    ref = float(oracles.dec_rho_fb(x, K, C, Cg))
    assert abs(cst.rho_fb(x, K, C, Cg) - ref) <= 1e-13 * max(1.0, ref)


@given(K=pos, C=pos, Cg=pos, eps=st.floats(1e-4, 0.5))
@settings(max_examples=60, deadline=None)
def test_inequality_lhs_match_decimal(K, C, Cg, eps):
    for fl, dec in ((cst.contraction_lhs, oracles.dec_contraction_lhs),
                    (cst.decoupling_lhs, oracles.dec_decoupling_lhs)):
        ref = float(dec(C, Cg, K, eps))
        assert abs(fl(C, Cg, K, eps) - ref) <= 1e-12 * max(1.0, ref)


@given(K=pos, C=pos, Cg=st.floats(0.01, 3.0), eps=st.floats(1e-4, 0.5))
@settings(max_examples=60, deadline=None)
def test_admissibility_is_monotone_in_interval_length(K, C, Cg, eps):
    if cst.eps_ok_decoupling(C, Cg, K, eps):
        assert cst.eps_ok_decoupling(C, Cg, K, eps / 2)
    assert cst.eps_ok_decoupling(C, Cg, K, eps) <= cst.eps_ok_contraction(C, Cg, K, eps)


def test_level_recursion_matches_decimal():
    levels = cst.level_recursion(0.2, 1.0, 0.5, 0.01, 100)
    ref = oracles.dec_level_recursion_last(0.2, 1.0, 0.5, 0.01, 100)
    assert abs(levels[-1] - float(ref)) < 1e-12 * float(ref)
    assert np.all(np.diff(levels) > 0)


@pytest.mark.parametrize("K,C,Cg,T", [(0.5, 0.5, 0.5, 1.0), (1.0, 1.0, 0.1, 0.5), (0.1, 0.25, 0.3, 1.0)])
def test_planner_is_minimal_against_exhaustive_scan(K, C, Cg, T):
    plan = cst.plan_from_constants(K, C, Cg, T)
    assert plan.N == oracles.oracle_min_levels(K, C, Cg, T)
    assert plan.cap_certified
    assert "level table" in plan.report()


def test_planner_beyond_scan_range_checked_in_decimal():
    plan = cst.plan_from_constants(0.0, 0.25, 2.0, 1.0)
    assert plan.N > 10**4
    chk = oracles.oracle_level_check(0.0, 0.25, 2.0, 1.0, plan.N)
    assert chk["passes"] and chk["previous_fails"] and chk["under_cap"]


def test_planner_overflow_names_the_failing_branch():
    with pytest.raises(PlannerOverflowError) as err:
        cst.plan_from_constants(5.0, 5.0, 5.0, 3.0, max_levels=64)
    assert "inequality still fails" in str(err.value)


def test_zero_growth_needs_only_two_levels():
    plan = cst.plan_partition(lookup_catalog("zero"))
    assert plan.N == 2 and plan.verdicts["decoupling"]


def test_perturbation_threshold():
    m = cst.tevzadze_margin(0.25, 0.25, 1.0, 0.03)
    assert m.threshold == pytest.approx(1 / 16) and m.passed
    assert not cst.tevzadze_margin(1.0, 1.0, 1.0, 0.01).passed
    assert cst.tevzadze_margin(1.0, 1.0, 1.0, 0.0).threshold == pytest.approx(1 / 256)
