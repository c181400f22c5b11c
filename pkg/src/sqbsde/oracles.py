"""Reference values computed without any solver code.

Gaussian expectations use Gauss-Hermite quadrature and are accepted only
after doubling the order moves them by less than ``SELF_CONVERGENCE``.
Constant formulas are re-evaluated in 50-digit decimal arithmetic so
comparisons with the float implementations are independent of rounding.
This module imports nothing from the solver modules.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from decimal import Decimal, localcontext

import numpy as np
from numpy.polynomial.hermite_e import hermegauss

from .errors import OracleError

__all__ = [
    "OracleResult",
    "SELF_CONVERGENCE",
    "quadrature_conditional_expectation",
    "cole_hopf_reference",
    "dec_rho",
    "dec_rho_fb",
    "dec_global_cap",
    "dec_decoupling_lhs",
    "dec_contraction_lhs",
    "dec_level_recursion_last",
    "dec_level_closed_form",
    "oracle_min_levels",
    "oracle_level_check",
]

SELF_CONVERGENCE = 1e-8
DIGITS = 50


@dataclass(frozen=True)
class OracleResult:
    value: float
    method: str
    order: int
    doubled: float

    @property
    def drift(self) -> float:
        return abs(self.doubled - self.value)


def _gauss_expectation(h, centre: float, sd: float, order: int) -> float:
    nodes, weights = hermegauss(order)
    vals = np.asarray(h(centre + sd * nodes), dtype=float)
    return float(np.dot(weights, vals) / math.sqrt(2.0 * math.pi))


def quadrature_conditional_expectation(h, t: float, x: float, T: float, order: int = 64) -> OracleResult:
    """``E[h(W_T) | W_t = x]`` by Gauss-Hermite quadrature; ``h`` acts on numpy arrays."""
    if order < 64:
        raise ValueError("quadrature order must be at least 64")
    if t > T:
        raise ValueError("t must not exceed T")
    sd = math.sqrt(T - t)
    value = _gauss_expectation(h, x, sd, order)
    doubled = _gauss_expectation(h, x, sd, 2 * order)
    if not abs(doubled - value) < SELF_CONVERGENCE:
        raise OracleError(f"quadrature self-convergence failed: order {order} vs {2 * order} differ by "
                          f"{abs(doubled - value):.3g}")
    return OracleResult(value, "gauss-hermite", order, doubled)


def _log_transform_y(xi, a: float, t: float, x: float, T: float, order: int) -> float:
    res = quadrature_conditional_expectation(lambda w: np.exp(2.0 * a * xi(w)), t, x, T, order)
    if not res.value > 0:
        raise OracleError("exponential moment is not positive")
    return math.log(res.value) / (2.0 * a)


def cole_hopf_reference(xi, a: float, t: float, x: float, T: float, order: int = 64,
                        h: float = 1e-5, richardson_tol: float = 1e-6):
    """``Y = log E[e^{2 a xi(W_T)} | W_t = x] / (2a)`` and ``Z = dY/dx``.

    ``Z`` is a centred difference with step ``h``; it is accepted only when
    it agrees with the Richardson combination of steps ``h`` and ``2h`` to
    ``richardson_tol``.
    """
    if a == 0:
        raise ValueError("a must be nonzero")

    def y(point):
        if t == T:
            return float(np.asarray(xi(np.array([point])))[0])
        return _log_transform_y(xi, a, t, point, T, order)

    y0 = y(x)
    z_h = (y(x + h) - y(x - h)) / (2.0 * h)
    z_2h = (y(x + 2.0 * h) - y(x - 2.0 * h)) / (4.0 * h)
    z_rich = (4.0 * z_h - z_2h) / 3.0
    if not abs(z_rich - z_h) < richardson_tol:
        raise OracleError(f"finite-difference Richardson check failed: {z_h:.12g} vs {z_rich:.12g}")
    return y0, z_rich


def _d(x) -> Decimal:
    return Decimal(repr(float(x))) if not isinstance(x, Decimal) else x


def dec_rho(x, K, C) -> Decimal:
    with localcontext() as ctx:
        ctx.prec = DIGITS
        x, K, C = _d(x), _d(K), _d(C)
        c = C / (2 * (C + 1))
        return (K + c) * (2 * (C + 1) * x).exp() - c


def dec_rho_fb(x, K, C, C_g) -> Decimal:
    with localcontext() as ctx:
        ctx.prec = DIGITS
        x, K, C, C_g = _d(x), _d(K), _d(C), _d(C_g)
        return (K + C * x) * (2 * (C + 1) * x + 4 * C_g * x * x).exp()


def dec_global_cap(K, C, C_g, T) -> Decimal:
    with localcontext() as ctx:
        ctx.prec = DIGITS
        K, C, C_g, T = _d(K), _d(C), _d(C_g), _d(T)
        return (K + C / (2 * (C + 1))) * (4 * (C + 1) * T + 4 * C_g * T * T).exp()


def dec_contraction_lhs(C, C_g, K, eps) -> Decimal:
    with localcontext() as ctx:
        ctx.prec = DIGITS
        C, C_g, K, eps = _d(C), _d(C_g), _d(K), _d(eps)
        return C_g * (6 * (2 * (C + 1) * eps).exp() * (K + C * eps) + 1) * (eps + 1) * eps


def dec_decoupling_lhs(C, C_g, K, eps) -> Decimal:
    with localcontext() as ctx:
        ctx.prec = DIGITS
        C, C_g, K, eps = _d(C), _d(C_g), _d(K), _d(eps)
        branch = 8 * (2 * (C + 1) * eps + 4 * C_g * eps * eps).exp() * (K + C * eps) * C_g * eps
        return max(branch, dec_contraction_lhs(C, C_g, K, eps))


def dec_level_recursion_last(K, C, C_g, delta, N: int) -> Decimal:
    """``K_N`` from ``K_j = (K_{j-1} + C delta) e^q`` iterated in decimal."""
    with localcontext() as ctx:
        ctx.prec = DIGITS
        K, C, C_g, delta = _d(K), _d(C), _d(C_g), _d(delta)
        growth = (2 * (C + 1) * delta + 4 * C_g * delta * delta).exp()
        k = K
        step = C * delta
        for _ in range(N):
            k = (k + step) * growth
        return k


def dec_level_closed_form(K, C, C_g, delta, j: int) -> Decimal:
    with localcontext() as ctx:
        ctx.prec = DIGITS
        K, C, C_g, delta = _d(K), _d(C), _d(C_g), _d(delta)
        q = 2 * (C + 1) * delta + 4 * C_g * delta * delta
        if C == 0:
            return K * (j * q).exp()
        shift = C * delta * q.exp() / (q.exp() - 1)
        return (j * q).exp() * (K + shift) - shift


def _admissible(K, C, C_g, T, N: int) -> bool:
    R = dec_global_cap(K, C, C_g, T)
    with localcontext() as ctx:
        ctx.prec = DIGITS
        return dec_decoupling_lhs(C, C_g, R, _d(T) / N) < 1


def oracle_min_levels(K, C, C_g, T, scan_limit: int = 10**4):
    """Smallest admissible ``N >= 2`` by exhaustive scan, or ``None`` beyond ``scan_limit``."""
    for N in range(2, scan_limit + 1):
        if _admissible(K, C, C_g, T, N):
            return N
    return None


def oracle_level_check(K, C, C_g, T, N: int) -> dict:
    """Decimal verdicts for a proposed count: ``N`` admissible, ``N - 1`` not, top level under ``R``."""
    R = dec_global_cap(K, C, C_g, T)
    with localcontext() as ctx:
        ctx.prec = DIGITS
        top = dec_level_closed_form(K, C, C_g, _d(T) / N, N)
    return {
        "passes": _admissible(K, C, C_g, T, N),
        "previous_fails": N == 2 or not _admissible(K, C, C_g, T, N - 1),
        "top_level": top,
        "cap": R,
        "under_cap": top <= R,
    }
