"""Global BSDE routes: backward gluing with a z-localizer, the superquadratic
localization, the exponential transform for diagonally quadratic drivers and
the perturbation route around a solvable base problem.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field, replace

import numpy as np

from . import rng
from .constants import PartitionPlan, plan_partition, rho, tevzadze_margin
from .errors import PreconditionError, SolverError, TransformDomainError
from .paths import STREAM_PROBE, PathBundle
from .problem import ProblemSpec
from .regression import DiscreteSolution, FeatureBasis, backward_picard, write_solution_csv

__all__ = [
    "localize",
    "GlobalSolution",
    "solve_global_lipschitz_g",
    "solve_global_superquadratic",
    "transformed_spec",
    "clamp_transformed",
    "forward_transform",
    "inverse_transform",
    "envelope",
    "solve_diagonal_quadratic",
    "PerturbedOutcome",
    "solve_perturbed",
    "measure_deviation",
]

ACTIVE_LIMIT = 1e-3
Z_SLACK = 0.05


def localize(z, radius: float):
    """``radius * z / max(radius, |z|)`` with the Frobenius norm.

    A vector or a single matrix is one argument; arrays of ndim >= 3 are a
    batch of matrices over the last two axes.
    """
    if not radius > 0:
        raise ValueError("radius must be positive")
    z = np.asarray(z, dtype=float)
    if z.ndim <= 2:
        norm = float(np.sqrt(np.sum(z**2)))
        return z if norm <= radius else z * (radius / norm)
    norm = np.sqrt(np.sum(z**2, axis=(-2, -1)))
    factor = np.where(norm > radius, radius / np.maximum(norm, radius), 1.0)
    return z * factor[..., None, None]


def _localized_driver(spec: ProblemSpec, radius: float):
    def drv(t, x, y, z):
        lz = localize(z, radius)
        return spec.eval_f(t, x, y, z) + np.einsum("pdn,pn->pd", lz, spec.eval_g(t, x, y, lz))

    return drv


@dataclass
class GlobalSolution:
    solution: DiscreteSolution = field(repr=False)
    plan: PartitionPlan = field(repr=False)
    route: str
    levels: list
    snapshots: list = field(repr=False)
    radius: float
    z_bound: np.ndarray = field(repr=False)
    certificate: dict
    notes: list = field(default_factory=list)
    transformed: DiscreteSolution | None = field(default=None, repr=False)

    @property
    def Y(self) -> np.ndarray:
        return self.solution.Y

    @property
    def Z(self) -> np.ndarray:
        return self.solution.Z

    def y0(self) -> np.ndarray:
        return self.solution.y0()

    @property
    def times(self) -> np.ndarray:
        return self.solution.times

    def to_csv(self, path):
        sol = self.solution
        bound = dict(zip(np.round(sol.times, 12), self.z_bound))
        write_solution_csv(path, sol.times, sol.Y, sol.Z,
                           lambda x: bound.get(round(sol.grid.T - x, 12), float("nan")), sol.grid.T)

    def certificate_text(self) -> str:
        lines = ["certificate", f"  route: {self.route}", f"  levels: {len(self.levels)}",
                 f"  localizer radius: {self.radius:.12g}"]
        for key in sorted(self.certificate):
            val = self.certificate[key]
            if isinstance(val, float):
                val = f"{val:.6g}"
            lines.append(f"  {key}: {val}")
        for note in self.notes:
            lines.append(f"  note: {note}")
        return "\n".join(lines)


def _level_bounds(M: int, N: int):
    if N > M:
        raise PreconditionError(f"grid has {M} steps but the plan needs {N} levels; use at least {N} steps")
    s = max(1, M // N)
    out = []
    e = M
    while e > 0:
        out.append((max(0, e - s), e))
        e = max(0, e - s)
    return out


def _glue(values, dW, grid, plan, terminal, driver, basis, tol, max_iter):
    """Solve level by level from ``T`` backward; returns the stitched solution."""
    bounds = _level_bounds(grid.M, plan.N)
    P = values.shape[0]
    d = terminal.shape[1]
    n = dW.shape[2]
    Y = np.empty((P, grid.M + 1, d))
    Z = np.empty((P, grid.M, d, n))
    projections = [None] * grid.M
    y_coef = [None] * grid.M
    z_coef = [None] * grid.M
    residual = np.zeros(grid.M + 1)
    iterations, gaps, history = 0, 0.0, []
    snapshots = []
    term = terminal
    Y[:, grid.M] = terminal
    for j, (s, e) in enumerate(bounds, start=1):
        try:
            sol = backward_picard(values, dW, grid, s, e, term, driver, basis, tol, max_iter)
        except SolverError as exc:
            exc.level = j
            if exc.args:
                exc.args = (f"level {j} on nodes [{s}, {e}]: {exc.args[0]}",) + exc.args[1:]
            raise
        Y[:, s:e] = sol.Y[:, : e - s]
        Z[:, s:e] = sol.Z
        projections[s:e] = sol.projections
        y_coef[s:e] = sol.y_coef
        z_coef[s:e] = sol.z_coef
        residual[s:e] = sol.residual[: e - s]
        iterations = max(iterations, sol.iterations)
        gaps = max(gaps, sol.gap)
        history.append(sol.gap_history)
        term = sol.Y[:, 0]
        snapshots.append((s, term))
    stitched = DiscreteSolution(grid, 0, grid.M, Y, Z, projections, y_coef, z_coef, basis, iterations, gaps,
                                history, residual)
    return stitched, bounds, snapshots


def _z_bound(K, C, grid):
    remaining = grid.T - grid.points[:-1]
    with np.errstate(over="ignore", invalid="ignore"):
        r = np.asarray(rho(remaining, K, C), dtype=float)
    return np.sqrt(np.maximum(r, 0.0))


def _require_identity(spec):
    if spec.sigma is not None:
        raise PreconditionError("BSDE routes need identity volatility; general sigma is for the local FBSDE solver")


def _certify(sol: DiscreteSolution, K, C, grid):
    bound = _z_bound(K, C, grid)
    zmax = sol.z_max
    ok = zmax <= bound * (1.0 + Z_SLACK)
    return bound, {"z bound holds at every node": bool(np.all(ok)),
                   "z bound worst ratio": float(np.max(zmax / np.maximum(bound, 1e-300)))}


def solve_global_lipschitz_g(spec: ProblemSpec, bundle: PathBundle, plan: PartitionPlan | None = None,
                             basis: FeatureBasis | None = None, tol: float = 1e-6, max_iter: int = 50,
                             radius: float | None = None, route: str = "lipschitz") -> GlobalSolution:
    """Backward gluing over the planned levels with driver ``f + L(z) g(L(z))``.

    Each level's terminal value is the previous level's fitted ``Y`` at its
    left endpoint; the default localizer radius is ``sqrt(R)``.
    """
    _require_identity(spec)
    if plan is None:
        plan = plan_partition(spec, "lipschitz")
    if bundle.grid.T != spec.T:
        raise PreconditionError("bundle horizon differs from the problem horizon")
    basis = basis or FeatureBasis()
    radius = math.sqrt(plan.R) if radius is None else radius
    if not math.isfinite(radius):
        radius = 1e300
    values = bundle.values
    terminal = spec.eval_xi(values)
    sol, bounds, snaps = _glue(values, bundle.increments(), bundle.grid, plan, terminal,
                               _localized_driver(spec, radius), basis, tol, max_iter)
    sol.terminal_fn = spec.eval_xi
    bound, cert = _certify(sol, spec.K, spec.C, bundle.grid)
    return GlobalSolution(sol, plan, route, bounds, snaps, radius, bound, cert)


def solve_global_superquadratic(spec: ProblemSpec, bundle: PathBundle, basis: FeatureBasis | None = None,
                                tol: float = 1e-6, max_iter: int = 50,
                                plan: PartitionPlan | None = None) -> GlobalSolution:
    """Localize at ``sqrt(rho(T))`` and glue with the effective ``C_g = l(2 sqrt(rho(T)))``.

    The certificate records the fraction of (path, node) samples where the
    localizer changed ``Z``; above 0.1% the unlocalized equation is not
    certified to be solved, and the solution is still returned.
    """
    if spec.l is None and spec.C_g is None:
        raise PreconditionError("superquadratic route needs a growth function l")
    plan = plan or plan_partition(spec, "superquadratic")
    radius = math.sqrt(max(rho(spec.T, spec.K, spec.C), 0.0))
    out = solve_global_lipschitz_g(spec, bundle, plan, basis, tol, max_iter, radius, route="superquadratic")
    znorm = np.sqrt(np.sum(out.Z**2, axis=(2, 3)))
    active = float(np.mean(znorm > radius))
    out.certificate["localizer active fraction"] = active
    out.certificate["localizer inactive (self-consistent)"] = active <= ACTIVE_LIMIT
    if active > ACTIVE_LIMIT:
        out.notes.append(f"self-consistency failed: localizer active on {active:.3%} of samples")
    return out


# exponential transform ------------------------------------------------------


def _clamp_bounds(spec: ProblemSpec):
    Mc = spec.C + (spec.C_bar or 0.0) * spec.T
    a = spec.a
    e1, e2 = np.exp(-2.0 * a * Mc), np.exp(2.0 * a * Mc)
    return np.minimum(e1, e2), np.maximum(e1, e2), Mc


def clamp_transformed(spec: ProblemSpec, y: np.ndarray) -> np.ndarray:
    """``L_M`` on each coordinate, endpoints ordered so negative weights work too."""
    lo, hi, _ = _clamp_bounds(spec)
    return np.clip(y, lo, hi)


def forward_transform(a, y, z=None):
    """``(e^{2a y}, 2a e^{2a y} z)`` row by row."""
    a = np.asarray(a, dtype=float)
    ybar = np.exp(2.0 * a * y)
    if z is None:
        return ybar
    return ybar, 2.0 * (a * ybar)[..., None] * z


def inverse_transform(a, ybar, zbar=None):
    """``(log(ybar)/(2a), zbar/(2a ybar))``; nonpositive ``ybar`` is an error."""
    a = np.asarray(a, dtype=float)
    ybar = np.asarray(ybar, dtype=float)
    if np.any(~(ybar > 0)):
        idx = np.argwhere(~(ybar > 0))[0]
        raise TransformDomainError(f"transformed solution is not positive at index {tuple(int(v) for v in idx)}")
    y = np.log(ybar) / (2.0 * a)
    if zbar is None:
        return y
    return y, zbar / (2.0 * (a * ybar))[..., None]


def envelope(spec: ProblemSpec, t):
    """Comparison band for ``Ybar`` at time ``t`` as ``(lower, upper)`` per coordinate."""
    t = np.asarray(t, dtype=float)
    cb = spec.C_bar or 0.0
    expo = 2.0 * np.multiply.outer(spec.C + cb * (spec.T - t), spec.a)
    e1, e2 = np.exp(-expo), np.exp(expo)
    return np.minimum(e1, e2), np.maximum(e1, e2)


def transformed_spec(spec: ProblemSpec) -> ProblemSpec:
    """The Lipschitz-in-y, locally Lipschitz-in-z problem solved by ``Ybar = e^{2aY}``.

    Declared constants are derived from the original ones through the clamp
    bounds; they are conservative, never audited.
    """
    if spec.a is None:
        raise PreconditionError("diagonal route needs the quadratic weights a")
    if spec.f_reads_z:
        raise PreconditionError("diagonal route needs f independent of z")
    if spec.C_bar is None:
        raise PreconditionError("diagonal route needs the bound C_bar of f")
    a = spec.a
    d = spec.d
    lo, hi, Mc = _clamp_bounds(spec)
    A = float(np.min(np.abs(a)))
    amax = float(np.max(np.abs(a)))
    y_lo, y_hi = float(np.min(lo)), float(np.max(hi))
    cb = spec.C_bar
    sqC = math.sqrt(spec.C)
    kappa = 1.0 / (2.0 * A * y_lo)

    def original_args(y, z):
        ly = clamp_transformed(spec, y)
        return np.log(ly) / (2.0 * a), z / (2.0 * (a * ly))[..., None], ly

    def xi(x):
        return np.exp(2.0 * a * spec.eval_xi(x))

    def f(t, x, y, z):
        yo, zo, ly = original_args(y, z)
        return 2.0 * a * ly * spec.eval_f(t, x, yo, zo)

    g = None
    lfun = None
    C_g = 0.0
    if not spec.g_vanishes and spec.g is not None:
        if spec.C_g is None:
            raise PreconditionError("diagonal route with a nonzero g needs a declared C_g")
        Cg = float(spec.C_g)

        def g(t, x, y, z):
            yo, zo, _ = original_args(y, z)
            return spec.eval_g(t, x, yo, zo)

        def lfun(r):
            h = max(kappa + kappa * r / y_lo, kappa, 1.0)
            return 3.0 * Cg * h * h

        C_g = None
    else:
        def lfun(r):
            return 0.0

    # |d(e^{2a xi})| <= 2|a| e^{2|a| C} |d xi|
    K_t = (2.0 * amax * math.exp(2.0 * amax * spec.C)) ** 2 * spec.K
    xi_bound2 = d * math.exp(4.0 * amax * spec.C)
    f_zero2 = d * (2.0 * amax * y_hi * cb) ** 2
    lf2 = d * (2.0 * amax) ** 2 * ((cb + y_hi * sqC * kappa) ** 2 + (y_hi * sqC) ** 2)
    g_zero2 = 0.0 if g is None else (sqC + math.sqrt(float(spec.C_g)) * Mc) ** 2
    C_t = max(xi_bound2, f_zero2, lf2, g_zero2)
    return ProblemSpec(
        name=f"{spec.name} (transformed)", d=d, n=spec.n, m=spec.m, xi=xi, f=f, g=g, sigma=None,
        T=spec.T, K=K_t, C=C_t, C_g=C_g, l=lfun, markovian=spec.markovian,
        xi_bounded=True, f_reads_z=False, g_vanishes=g is None, reference=None, params=dict(spec.params),
    )


def solve_diagonal_quadratic(spec: ProblemSpec, bundle: PathBundle, basis: FeatureBasis | None = None,
                             tol: float = 1e-6, max_iter: int = 50) -> GlobalSolution:
    """Solve the transformed problem, check positivity and the envelope, invert."""
    _require_identity(spec)
    tspec = transformed_spec(spec)
    basis = basis or FeatureBasis("local-constant", bins=64)
    inner = solve_global_superquadratic(tspec, bundle, basis, tol, max_iter)
    ybar, zbar = inner.Y, inner.Z
    Y, Z = inverse_transform(spec.a, ybar[:, :-1], zbar)
    Y = np.concatenate([Y, inverse_transform(spec.a, ybar[:, -1:])], axis=1)
    # terminal values come straight from xi, bypassing the round trip
    Y[:, -1] = spec.eval_xi(bundle.values)
    lo, hi = envelope(spec, bundle.grid.points)
    means = np.stack([rng.chunked_mean(ybar[:, k]) for k in range(ybar.shape[1])])
    mean_ok = bool(np.all((means >= lo) & (means <= hi)))
    path_ok = bool(np.all((ybar >= lo[None] * 0.98) & (ybar <= hi[None] * 1.02)))
    sol = replace(inner.solution, Y=Y, Z=Z, terminal_fn=spec.eval_xi)
    cert = dict(inner.certificate)
    cert["envelope holds for means"] = mean_ok
    cert["envelope holds pathwise (2% slack)"] = path_ok
    notes = list(inner.notes)
    if np.any(spec.a < 0):
        notes.append("envelope for negative weights is the mirrored band (inferred by symmetry from the positive case)")
    out = GlobalSolution(sol, inner.plan, "diagonal", inner.levels, inner.snapshots, inner.radius,
                         inner.z_bound, cert, notes, transformed=inner.solution)
    return out


# perturbation route -------------------------------------------------------


@dataclass
class PerturbedOutcome:
    accepted: bool
    threshold: float
    deviation: float
    margin: float
    solution: GlobalSolution | None = None

    def report(self) -> str:
        verdict = "accepted" if self.accepted else "rejected"
        return (f"perturbation route {verdict}: deviation={self.deviation:.6g} "
                f"threshold={self.threshold:.6g} margin={self.margin:.6g}"
                + ("" if not self.accepted else " (a solution; uniqueness is not claimed)"))


def measure_deviation(target: ProblemSpec, base: ProblemSpec, bundle: PathBundle, n_probe: int = 1000,
                      seed: int = 0, arg_scale: float = 2.0) -> float:
    """Sup over probe paths of ``|xi - xi_bar| + sum |F - f - z g| delta`` at random ``(y, z)``."""
    values = bundle.values[: min(n_probe, bundle.n_paths)]
    P = values.shape[0]
    grid = bundle.grid
    dev = np.sqrt(np.sum((target.eval_xi(values) - base.eval_xi(values)) ** 2, axis=1))
    for i in range(grid.M):
        y = rng.normals(seed, STREAM_PROBE, 2 * i, P, target.d) * arg_scale
        z = rng.normals(seed, STREAM_PROBE, 2 * i + 1, P, target.d * target.n).reshape(P, target.d, target.n) * arg_scale
        prefix = values[:, : i + 1]
        diff = target.driver(grid.t(i), prefix, y, z) - base.driver(grid.t(i), prefix, y, z)
        dev = dev + np.sqrt(np.sum(diff**2, axis=1)) * grid.delta
    return float(np.max(dev))


def solve_perturbed(target: ProblemSpec, base: ProblemSpec, C_y: float, C_z: float, bundle: PathBundle,
                    base_solution: GlobalSolution | None = None, basis: FeatureBasis | None = None,
                    tol: float = 1e-6, max_iter: int = 50, deviation: float | None = None,
                    seed: int = 0) -> PerturbedOutcome:
    """Solve for ``(P, Q)`` with ``P_T = xi - xi_bar`` around the base solution.

    Rejection (deviation not strictly below the threshold) is an outcome,
    not an exception. The difference equation localizes ``Q`` at radius
    ``1/(4 sqrt(beta))``.
    """
    _require_identity(target)
    if deviation is None:
        deviation = measure_deviation(target, base, bundle, seed=seed)
    margin = tevzadze_margin(C_y, C_z, target.T, deviation)
    if not margin.passed:
        return PerturbedOutcome(False, margin.threshold, deviation, margin.margin)
    if base_solution is None:
        route = "superquadratic" if base.C_g is None else "lipschitz"
        base_solution = (solve_global_superquadratic(base, bundle, basis, tol, max_iter) if route == "superquadratic"
                         else solve_global_lipschitz_g(base, bundle, None, basis, tol, max_iter))
    grid = bundle.grid
    Ybar, Zbar = base_solution.Y, base_solution.Z
    radius = 1.0 / (4.0 * math.sqrt(margin.beta))
    values = bundle.values
    dxi = target.eval_xi(values) - base.eval_xi(values)

    def driver(t, x, p, q):
        k = grid.index_of(t)
        yb, zb = Ybar[:, k], Zbar[:, k]
        return target.driver(t, x, p + yb, localize(q, radius) + zb) - base.driver(t, x, yb, zb)

    basis = basis or base_solution.solution.basis
    plan = base_solution.plan
    diff, _, _ = _glue(values, bundle.increments(), grid, plan, dxi, driver, basis, tol, max_iter)
    Y = Ybar + diff.Y
    Z = Zbar + diff.Z
    # both sweeps fit the same projections on the same nodes, so field weights add
    base_sol = base_solution.solution
    sol = replace(base_sol, Y=Y, Z=Z, terminal_fn=target.eval_xi,
                  y_coef=[a + b for a, b in zip(base_sol.y_coef, diff.y_coef)],
                  z_coef=[a + b for a, b in zip(base_sol.z_coef, diff.z_coef)])
    cert = {"perturbation margin": margin.margin, "difference localizer radius": radius}
    out = GlobalSolution(sol, plan, "perturbed", base_solution.levels, base_solution.snapshots, radius,
                         base_solution.z_bound, cert, ["a solution; uniqueness is not claimed"])
    return PerturbedOutcome(True, margin.threshold, deviation, margin.margin, out)
