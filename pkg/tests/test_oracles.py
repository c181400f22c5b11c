import math

import numpy as np
import pytest

from sqbsde import oracles
from sqbsde.errors import OracleError

# frozen from 30-digit mpmath quadrature, computed once outside the package
SIN_SHIFT = 0.5103779515445729
COLE_HOPF_Y0 = 0.36933296898209934
COLE_HOPF_Z0 = 0.45753253010603095


def test_quadrature_matches_frozen_closed_form():
    res = oracles.quadrature_conditional_expectation(lambda w: np.sin(1 + w), 0.0, 0.0, 1.0)
    assert abs(res.value - SIN_SHIFT) < 1e-12
    assert abs(SIN_SHIFT - math.sin(1.0) * math.exp(-0.5)) < 1e-15
    assert res.drift < oracles.SELF_CONVERGENCE


def test_quadrature_gaussian_moments():
    res = oracles.quadrature_conditional_expectation(lambda w: w**4, 0.2, 0.5, 1.2)
    # E[(x + sqrt(s) N)^4] = x^4 + 6 x^2 s + 3 s^2
    assert abs(res.value - (0.5**4 + 6 * 0.25 * 1.0 + 3.0)) < 1e-10


def test_quadrature_rejects_low_order_and_nonconvergent_integrands():
    with pytest.raises(ValueError):
        oracles.quadrature_conditional_expectation(np.sin, 0, 0, 1, order=16)
    with pytest.raises(OracleError):
        oracles.quadrature_conditional_expectation(lambda w: np.abs(w) ** 0.5 * np.sign(w) * 1e9, 0, 0.3, 1)


def test_cole_hopf_reference_frozen():
    y, z = oracles.cole_hopf_reference(np.sin, 1.0, 0.0, 0.0, 1.0)
    assert abs(y - COLE_HOPF_Y0) < 1e-10
    assert abs(z - COLE_HOPF_Z0) < 1e-7


def test_decimal_rho_frozen():
    # mpmath value of rho(1) with K = C = 1
    assert abs(float(oracles.dec_rho(1, 1, 1)) - 67.9976875414303) < 1e-12
    assert abs(float(oracles.dec_rho_fb(0.1, 1, 1, 1)) - 1.7079779403624698) < 1e-14


def test_level_closed_form_matches_recursion():
    for j in (1, 5, 40):
        rec = oracles.dec_level_recursion_last(0.3, 0.7, 0.2, 0.01, j)
        closed = oracles.dec_level_closed_form(0.3, 0.7, 0.2, 0.01, j)
        assert abs(rec - closed) < 1e-35


def test_exhaustive_scan_agrees_with_level_check():
    N = oracles.oracle_min_levels(0.5, 0.5, 0.5, 1.0)
    chk = oracles.oracle_level_check(0.5, 0.5, 0.5, 1.0, N)
    assert chk["passes"] and chk["previous_fails"] and chk["under_cap"]
