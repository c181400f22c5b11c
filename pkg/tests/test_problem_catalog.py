import numpy as np
import pytest

from sqbsde.catalog import affine_coupled_closed_form, catalog_names, lookup_catalog
from sqbsde.errors import CatalogError
from sqbsde.problem import audit_assumptions


def test_catalog_lists_every_entry():
    names = catalog_names()
    for name in ("zero", "affine", "linear-drift", "affine-coupled", "sine-terminal", "quad-1d",
                 "diagonal-quadratic", "lipschitz-mixed", "superquadratic", "reflected-drift"):
        assert name in names


def test_unknown_entry_and_parameter_are_rejected():
    with pytest.raises(CatalogError, match="nosuch"):
        lookup_catalog("nosuch")
    with pytest.raises(CatalogError, match="cc"):
        lookup_catalog("affine", {"cc": 1.0})


@pytest.mark.parametrize("name", ["zero", "affine", "linear-drift", "affine-coupled", "sine-terminal",
                                  "lipschitz-mixed"])
def test_declared_constants_survive_the_audit(name):
    report = audit_assumptions(lookup_catalog(name), probe_budget=400, seed=1)
    assert report.passed, report.text()


def test_audit_catches_an_understated_constant():
    spec = lookup_catalog("sine-terminal", {"scale": 2.0})
    from dataclasses import replace

    lying = replace(spec, K=0.5)
    assert not audit_assumptions(lying, probe_budget=400, seed=1).passed


def test_affine_coupled_closed_form_solves_its_riccati_equation():
    c, kappa, T = 0.2, 1.0, 0.3
    t = np.linspace(0, T, 7)
    alpha, beta = affine_coupled_closed_form(c, kappa, t, T)
    h = 1e-6
    ap, bp = affine_coupled_closed_form(c, kappa, t + h, T)
    am, bm = affine_coupled_closed_form(c, kappa, t - h, T)
    # alpha' = -kappa alpha^2, beta' = -alpha (c + kappa beta)
    assert np.allclose((ap - am) / (2 * h), -kappa * alpha**2, rtol=1e-6)
    assert np.allclose((bp - bm) / (2 * h), -alpha * (c + kappa * beta), rtol=1e-6)
    assert alpha[-1] == 1.0 and beta[-1] == 0.0


def test_horizon_change_keeps_other_fields():
    spec = lookup_catalog("affine").with_horizon(0.25)
    assert spec.T == 0.25 and spec.K == 1.0
