"""Explicit constants, admissibility inequalities and the backward gluing plan."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from decimal import Decimal, localcontext

import numpy as np

from .errors import DegenerateConstantsError, PlannerOverflowError

__all__ = [
    "GUARD",
    "contraction_lhs",
    "decoupling_lhs",
    "eps_ok_contraction",
    "eps_ok_decoupling",
    "rho_fb",
    "rho",
    "global_cap",
    "level_exponent",
    "level_recursion",
    "level_closed_form",
    "PartitionPlan",
    "plan_partition",
    "plan_from_constants",
    "TevzadzeMargin",
    "tevzadze_margin",
]

GUARD = 1e-12


def _exp(x: float) -> float:
    try:
        return math.exp(x)
    except OverflowError:
        return math.inf


def contraction_lhs(C: float, C_g: float, K: float, eps: float) -> float:
    """``C_g (6 e^{2(C+1)eps} (K + C eps) + 1)(eps + 1) eps``, the contraction constant."""
    if C_g == 0:
        return 0.0
    return C_g * (6.0 * _exp(2.0 * (C + 1.0) * eps) * (K + C * eps) + 1.0) * (eps + 1.0) * eps


def _decoupling_branch(C: float, C_g: float, K: float, eps: float) -> float:
    if C_g == 0:
        return 0.0
    return 8.0 * _exp(2.0 * (C + 1.0) * eps + 4.0 * C_g * eps**2) * (K + C * eps) * C_g * eps


def decoupling_lhs(C: float, C_g: float, K: float, eps: float) -> float:
    return max(_decoupling_branch(C, C_g, K, eps), contraction_lhs(C, C_g, K, eps))


def _decimal_lhs(C: float, C_g: float, K: float, eps: float, decoupling: bool) -> Decimal:
    with localcontext() as ctx:
        ctx.prec = 40
        C, C_g, K, eps = (Decimal(repr(float(v))) for v in (C, C_g, K, eps))
        contraction = C_g * (6 * (2 * (C + 1) * eps).exp() * (K + C * eps) + 1) * (eps + 1) * eps
        if not decoupling:
            return contraction
        branch = 8 * (2 * (C + 1) * eps + 4 * C_g * eps * eps).exp() * (K + C * eps) * C_g * eps
        return max(branch, contraction)


def _strictly_below_one(value: float, C, C_g, K, eps, decoupling: bool) -> bool:
    """``value < 1``, re-deciding near-ties in 40-digit decimal arithmetic."""
    if abs(value - 1.0) > GUARD:
        return value < 1.0
    return _decimal_lhs(C, C_g, K, eps, decoupling) < 1


def _check_args(C, C_g, K, eps):
    if min(C, C_g, K) < 0 or not eps > 0:
        raise ValueError("constants must be nonnegative and eps positive")


def eps_ok_contraction(C: float, C_g: float, K: float, eps: float) -> bool:
    _check_args(C, C_g, K, eps)
    return _strictly_below_one(contraction_lhs(C, C_g, K, eps), C, C_g, K, eps, False)


def eps_ok_decoupling(C: float, C_g: float, K: float, eps: float) -> bool:
    _check_args(C, C_g, K, eps)
    return _strictly_below_one(decoupling_lhs(C, C_g, K, eps), C, C_g, K, eps, True)


def rho_fb(x, K: float, C: float, C_g: float):
    """Lipschitz² bound of the small-interval decoupling field."""
    x = np.asarray(x, dtype=float)
    out = (K + C * x) * np.exp(2.0 * (C + 1.0) * x + 4.0 * C_g * x**2)
    return float(out) if out.ndim == 0 else out


def rho(x, K: float, C: float):
    """Lipschitz² bound of the global decoupling field at remaining time ``x``."""
    x = np.asarray(x, dtype=float)
    c = C / (2.0 * (C + 1.0))
    b = 2.0 * (C + 1.0) * x
    # K e^b + c (e^b - 1): exact at x = 0 and free of cancellation for small x
    with np.errstate(over="ignore", invalid="ignore"):
        out = K * np.exp(b) + c * np.expm1(b)
    return float(out) if out.ndim == 0 else out


def global_cap(K: float, C: float, C_g: float, T: float) -> float:
    """The cap ``R`` dominating every level constant."""
    return (K + C / (2.0 * (C + 1.0))) * _exp(4.0 * (C + 1.0) * T + 4.0 * C_g * T**2)


def level_exponent(C: float, C_g: float, delta: float) -> float:
    return 2.0 * (C + 1.0) * delta + 4.0 * C_g * delta**2


def level_recursion(K: float, C: float, C_g: float, delta: float, N: int) -> np.ndarray:
    """``K_0..K_N`` from ``K_j = (K_{j-1} + C delta) e^q``."""
    growth = _exp(level_exponent(C, C_g, delta))
    out = np.empty(N + 1)
    out[0] = K
    k = K
    for j in range(1, N + 1):
        k = (k + C * delta) * growth
        out[j] = k
    return out


def level_closed_form(K: float, C: float, C_g: float, delta: float, j):
    """Geometric-sum form of the level recursion."""
    q = level_exponent(C, C_g, delta)
    j = np.asarray(j, dtype=float)
    if C == 0:
        out = K * np.exp(j * q)
    else:
        shift = C * delta * math.exp(q) / math.expm1(q)
        out = np.exp(j * q) * (K + shift) - shift
    return float(out) if out.ndim == 0 else out


@dataclass
class PartitionPlan:
    """Backward gluing schedule with its certified constants."""

    route: str
    T: float
    N: int
    delta: float
    R: float
    K: float
    C: float
    effective_Cg: float
    verdicts: dict
    lhs: dict
    levels: np.ndarray | None = field(default=None, repr=False)

    def level(self, j: int) -> float:
        if self.levels is not None:
            return float(self.levels[j])
        return level_closed_form(self.K, self.C, self.effective_Cg, self.delta, j)

    @property
    def max_level(self) -> float:
        # levels increase in j, so the last one is the largest
        return self.level(self.N)

    @property
    def cap_certified(self) -> bool:
        return self.max_level <= self.R

    def report(self, max_rows: int = 12) -> str:
        lines = [
            "partition plan",
            f"  route: {self.route}",
            f"  T: {self.T:.12g}",
            f"  N: {self.N}",
            f"  delta: {self.delta:.12g}",
            f"  R: {self.R:.12g}",
            f"  effective C_g: {self.effective_Cg:.12g}",
        ]
        for name in ("contraction", "decoupling"):
            state = "holds" if self.verdicts[name] else "fails"
            lines.append(f"  {name} inequality at delta with K->R: {state} (lhs={self.lhs[name]:.6g})")
        lines.append(f"  max level constant <= R: {'yes' if self.cap_certified else 'no'}")
        lines.append("  level table (j, K_j):")
        js = list(range(self.N + 1))
        if len(js) > max_rows:
            half = max_rows // 2
            js = js[:half] + [None] + js[-half:]
        for j in js:
            lines.append("    ..." if j is None else f"    {j:>8d}  {self.level(j):.12g}")
        return "\n".join(lines)


def plan_from_constants(
    K: float,
    C: float,
    C_g: float,
    T: float,
    route: str = "lipschitz",
    max_levels: int | None = 10**6,
) -> PartitionPlan:
    """Minimal ``N >= 2`` with ``T/N`` admissible after replacing ``K`` by ``R``."""
    R = global_cap(K, C, C_g, T)

    def ok(N: int) -> bool:
        return eps_ok_decoupling(C, C_g, R, T / N)

    def overflow(N_last: int):
        d = T / N_last
        branch = "contraction" if contraction_lhs(C, C_g, R, d) >= _decoupling_branch(C, C_g, R, d) else "decoupling"
        raise PlannerOverflowError(
            f"no admissible N <= {N_last}: the {branch} inequality still fails "
            f"(lhs={decoupling_lhs(C, C_g, R, d):.6g} at N={N_last}, R={R:.6g})",
            branch,
        )

    if ok(2):
        N = 2
    else:
        lo, hi = 2, 4
        while True:
            if max_levels is not None and hi >= max_levels:
                hi = max_levels
                if not ok(hi):
                    overflow(hi)
                break
            if ok(hi):
                break
            if hi > 1 << 62:
                overflow(hi)
            lo, hi = hi, hi * 2
        while hi - lo > 1:
            mid = (lo + hi) // 2
            if ok(mid):
                hi = mid
            else:
                lo = mid
        N = hi
    delta = T / N
    verdicts = {
        "contraction": eps_ok_contraction(C, C_g, R, delta),
        "decoupling": eps_ok_decoupling(C, C_g, R, delta),
    }
    lhs = {
        "contraction": contraction_lhs(C, C_g, R, delta),
        "decoupling": decoupling_lhs(C, C_g, R, delta),
    }
    levels = level_recursion(K, C, C_g, delta, N) if N <= 10**6 else None
    return PartitionPlan(route, T, N, delta, R, K, C, C_g, verdicts, lhs, levels)


def effective_growth_constant(spec) -> float:
    """Lipschitz² constant of the localized ``g`` for the superquadratic route."""
    radius = math.sqrt(rho(spec.T, spec.K, spec.C))
    candidates = []
    if spec.l is not None:
        candidates.append(float(spec.l(2.0 * radius)))
    if spec.C_g is not None:
        candidates.append(float(spec.C_g))
    if not candidates:
        raise ValueError("superquadratic planning needs a growth function l")
    return min(candidates)


def plan_partition(spec, route: str = "lipschitz", max_levels: int | None = 10**6) -> PartitionPlan:
    """Plan the gluing schedule for ``spec`` along ``route``."""
    if route == "lipschitz":
        if spec.C_g is None:
            raise ValueError("lipschitz route needs a declared C_g")
        C_g = float(spec.C_g)
    elif route == "superquadratic":
        C_g = effective_growth_constant(spec)
    elif route == "diagonal":
        from .global_bsde import transformed_spec

        return plan_partition(transformed_spec(spec), "superquadratic", max_levels)
    else:
        raise ValueError(f"unknown route {route!r}")
    return plan_from_constants(spec.K, spec.C, C_g, spec.T, route, max_levels)


@dataclass(frozen=True)
class TevzadzeMargin:
    threshold: float
    passed: bool
    beta: float
    deviation: float

    @property
    def margin(self) -> float:
        return self.threshold - self.deviation


def tevzadze_margin(C_y: float, C_z: float, T: float, deviation: float) -> TevzadzeMargin:
    """Smallness threshold ``min(1/(256 beta), C_z^2)`` with ``beta = max(C_y^2 T, C_z^2)``."""
    beta = max(C_y**2 * T, C_z**2)
    if not beta > 0:
        raise DegenerateConstantsError("beta = max(C_y^2 T, C_z^2) must be positive")
    if deviation < 0:
        raise ValueError("deviation must be nonnegative")
    threshold = min(1.0 / (256.0 * beta), C_z**2)
    return TevzadzeMargin(threshold, deviation < threshold, beta, deviation)
