"""Built-in problems with analytically declared constants.

Every entry states its constants from the formulas, never from an audit.
Coefficients read the forward path ``x`` of shape ``(P, i+1, m)``; ``x[:, -1]``
is the current state.
"""

from __future__ import annotations

import math

import numpy as np

from .errors import CatalogError
from .problem import ProblemSpec

__all__ = ["lookup_catalog", "catalog_names", "CATALOG"]


def _const(value, width):
    def fn(t, x, y=None, z=None):
        return np.full((x.shape[0], width), float(value))

    return fn


def _terminal_state(x):
    return x[:, -1, :1]


def _zero(p):
    return ProblemSpec(
        name="zero", d=1, n=1, m=1,
        xi=lambda x: np.zeros((x.shape[0], 1)),
        K=0.0, C=p["bound"], C_g=0.0, g_vanishes=True, f_reads_z=False,
        reference="closed-form: Y=0, Z=0", params=p,
    )


def _affine(p):
    c = p["c"]
    return ProblemSpec(
        name="affine", d=1, n=1, m=1,
        xi=_terminal_state, f=_const(c, 1),
        K=1.0, C=c * c, C_g=0.0, xi_bounded=False, f_reads_z=False, g_vanishes=True,
        reference="closed-form: Y=x_t+c(T-t), Z=1", params=p,
    )


def _linear_drift(p):
    c = p["c"]
    return ProblemSpec(
        name="linear-drift", d=1, n=1, m=1,
        xi=_terminal_state, g=_const(c, 1),
        K=1.0, C=c * c, C_g=0.0, xi_bounded=False, f_reads_z=False,
        reference="closed-form: Y=x_t+c(T-t), Z=1; coupled X=x_u+c(t-u)+W", params=p,
    )


def _affine_coupled(p):
    c, kappa = p["c"], p["kappa"]

    def g(t, x, y, z):
        return c + kappa * y[:, :1]

    return ProblemSpec(
        name="affine-coupled", d=1, n=1, m=1,
        xi=_terminal_state, g=g,
        K=1.0, C=max(c * c, 1e-12), C_g=kappa * kappa, xi_bounded=False, f_reads_z=False,
        reference="closed-form: Y=alpha(t)X+beta(t), alpha=1/(1-kappa(T-t))", params=p,
    )


def affine_coupled_closed_form(c: float, kappa: float, t, T: float):
    """``(alpha, beta)`` with ``Y_t = alpha X_t + beta`` and ``Z_t = alpha``."""
    s = np.asarray(T - np.asarray(t, dtype=float))
    if kappa == 0:
        return np.ones_like(s), c * s
    alpha = 1.0 / (1.0 - kappa * s)
    # beta = alpha h solves beta' = -alpha c - alpha kappa beta when h' = -c
    return alpha, c * s * alpha


def _sine_terminal(p):
    scale, shift = p["scale"], p["shift"]

    def xi(x):
        return np.sin(scale * x[:, -1, :1] + shift)

    return ProblemSpec(
        name="sine-terminal", d=1, n=1, m=1,
        xi=xi, K=scale * scale, C=1.0, C_g=0.0, f_reads_z=False, g_vanishes=True,
        reference="gauss-hermite quadrature", params=p,
    )


def _square_terminal(p):
    r = p["radius"]

    def xi(x):
        return np.minimum(x[:, -1, :1] ** 2, r * r)

    return ProblemSpec(
        name="square-terminal", d=1, n=1, m=1,
        xi=xi, K=4.0 * r * r, C=r**4, C_g=0.0, f_reads_z=False, g_vanishes=True,
        reference="closed-form: Y=x_t^2+(T-t), Z=2x_t (up to the truncation radius)", params=p,
    )


def _quad_1d(p):
    a, scale = p["a"], p["scale"]

    def xi(x):
        return np.sin(scale * x[:, -1, :1])

    return ProblemSpec(
        name="quad-1d", d=1, n=1, m=1,
        xi=xi, K=scale * scale, C=1.0, C_g=0.0, C_bar=0.0, a=np.array([a]),
        l=lambda r: 0.0, f_reads_z=False, g_vanishes=True,
        reference="log-transform quadrature", params=p,
    )


def _diagonal_quadratic(p):
    a1, a2, amp, cbar = p["a1"], p["a2"], p["amp"], p["cbar"]

    def xi(x):
        s = x[:, -1, 0]
        return amp * np.stack([np.sin(s), np.cos(s)], axis=1)

    def f(t, x, y, z):
        s = x[:, -1, 0]
        return cbar * np.stack([np.cos(s), np.sin(s)], axis=1)

    return ProblemSpec(
        name="diagonal-quadratic", d=2, n=1, m=1,
        xi=xi, f=f,
        # |d(sin, cos)| = 2|sin(ds/2)| <= |ds|; f rows are cbar-Lipschitz in the state
        K=amp * amp, C=max(1.0, 2.0 * cbar * cbar), C_g=0.0, C_bar=cbar,
        a=np.array([a1, a2]), l=lambda r: 0.0, f_reads_z=False, g_vanishes=True,
        reference=None, params=p,
    )


def _lipschitz_mixed(p):
    alpha, beta, gamma, lam, mu = p["alpha"], p["beta"], p["gamma"], p["lam"], p["mu"]

    def xi(x):
        return alpha * np.sin(np.max(x[:, :, 0], axis=1))[:, None]

    def f(t, x, y, z):
        return -lam * y[:, :1] + beta * np.cos(x[:, -1, :1]) + mu * np.sin(z[:, 0, :1])

    def g(t, x, y, z):
        return gamma * np.sin(x[:, -1, :1] + y[:, :1])

    return ProblemSpec(
        name="lipschitz-mixed", d=1, n=1, m=1,
        xi=xi, f=f, g=None if gamma == 0 else g,
        # |df| <= beta|dx| + lam|dy| + mu|dz|, then Cauchy-Schwarz over three terms
        K=alpha * alpha,
        C=max(alpha * alpha, 3.0 * (beta * beta + lam * lam + mu * mu), gamma * gamma, 1e-12),
        C_g=2.0 * gamma * gamma, markovian=False, f_reads_z=mu != 0, g_vanishes=gamma == 0,
        reference=None, params=p,
    )


def _superquadratic(p):
    eps = p["eps"]

    def xi(x):
        return eps * np.sin(x[:, -1, :1])

    def g(t, x, y, z):
        w = z[:, 0, :1]
        return w * np.abs(w)

    return ProblemSpec(
        name="superquadratic", d=1, n=1, m=1,
        xi=xi, g=g,
        # |w|w| - v|v|| <= (|w| + |v|)|w - v|
        K=eps * eps, C=eps * eps, C_g=None, l=lambda r: r * r, f_reads_z=False,
        reference=None, params=p,
    )


def _reflected_drift(p):
    theta, lo, hi = p["theta"], p["lower"], p["upper"]
    from .reflection import skorokhod_1d

    def xi(x):
        dt = 1.0 / (x.shape[1] - 1) if x.shape[1] > 1 else 0.0
        start = np.clip(x[:, :1, 0], lo, hi)
        shifted = x[:, :, 0] - x[:, :1, 0] + start
        reflected = skorokhod_1d(shifted, lo, hi).values
        phi = np.zeros(x.shape[0])
        inc = np.diff(reflected, axis=1)
        for i in range(inc.shape[1]):
            phi = phi - theta * phi * dt + inc[:, i]
        return np.sin(phi)[:, None]

    # clip + shift is 3-Lipschitz in sup norm, the interval map at most 4, the
    # Euler map with a unit coefficient C_f = max(theta, 1) on [0, 1] at most L
    c_f = max(theta, 1.0)
    lip = 3.0 * 4.0 * c_f * 2.0 * math.exp(c_f)
    return ProblemSpec(
        name="reflected-drift", d=1, n=1, m=1,
        xi=xi, K=lip * lip, C=1.0, C_g=0.0, markovian=False, f_reads_z=False, g_vanishes=True,
        reference=None, params=p,
    )


CATALOG = {
    "zero": (_zero, {"bound": 1.0}),
    "affine": (_affine, {"c": 0.5}),
    "linear-drift": (_linear_drift, {"c": 0.3}),
    "affine-coupled": (_affine_coupled, {"c": 0.2, "kappa": 1.0}),
    "sine-terminal": (_sine_terminal, {"scale": 1.0, "shift": 0.0}),
    "square-terminal": (_square_terminal, {"radius": 10.0}),
    "quad-1d": (_quad_1d, {"a": 1.0, "scale": 1.0}),
    "diagonal-quadratic": (_diagonal_quadratic, {"a1": 1.0, "a2": -0.5, "amp": 0.5, "cbar": 0.2}),
    "lipschitz-mixed": (_lipschitz_mixed, {"alpha": 0.5, "beta": 0.3, "gamma": 0.0, "lam": 0.2, "mu": 0.0}),
    "superquadratic": (_superquadratic, {"eps": 0.1}),
    "reflected-drift": (_reflected_drift, {"theta": 0.5, "lower": 0.0, "upper": 1.0}),
}


def catalog_names() -> list:
    return sorted(CATALOG)


def lookup_catalog(name: str, params: dict | None = None) -> ProblemSpec:
    """Build the named problem; parameters not given keep their defaults."""
    if name not in CATALOG:
        raise CatalogError(f"unknown catalog entry {name!r}; available: {', '.join(catalog_names())}")
    builder, defaults = CATALOG[name]
    params = dict(params or {})
    unknown = sorted(set(params) - set(defaults))
    if unknown:
        raise CatalogError(
            f"unknown parameter(s) {', '.join(unknown)} for {name!r}; accepted: {', '.join(sorted(defaults))}"
        )
    merged = {k: float(params.get(k, v)) for k, v in defaults.items()}
    return builder(merged)
