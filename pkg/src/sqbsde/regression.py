"""Least-squares regression BSDE solver with Picard iteration.

Conditional expectations at grid node ``i`` are projections onto features of
the path up to ``i``. The backward sweep is

    Z_i = Regress((Y_{i+1} - Pi_i Y_{i+1}) dW_i^T) / delta
    Y_i = Regress(Y_{i+1} + F(t_i, x, Y_i^prev, Z_i) delta)

where ``Pi_i Y_{i+1}`` is the projection of ``Y_{i+1}`` itself. Subtracting it
leaves the conditional expectation unchanged (``E_i dW_i = 0``) and removes most
of the variance of the ``Z`` target.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from itertools import combinations_with_replacement
from typing import Callable

import numpy as np
from scipy.linalg import cho_factor, cho_solve

from . import rng
from .constants import rho
from .errors import BasisError, DivergenceError
from .paths import PathBundle, TimeGrid

__all__ = [
    "FeatureBasis",
    "Projection",
    "DiscreteSolution",
    "backward_picard",
    "solve_lipschitz_bsde",
    "conditional_expectation",
    "stability_gap",
    "apriori_bound_check",
    "AprioriReport",
]

MAX_CONDITION = 1e12
DIVERGENCE_STREAK = 3


@dataclass(frozen=True)
class FeatureBasis:
    """Regression features at one grid node.

    ``polynomial``: all monomials of the current state up to ``degree``.
    ``path``: the same plus running max and running integral of each
    coordinate (with squares when ``degree >= 2``), toggled separately.
    ``local-constant``: piecewise-constant fit on ``bins`` quantile cells of
    a one-dimensional current state. Averages of positive targets stay
    positive, which the exponential transform relies on.
    """

    kind: str = "polynomial"
    degree: int = 2
    running_max: bool = True
    running_integral: bool = True
    bins: int = 64

    def __post_init__(self):
        if self.kind not in ("polynomial", "path", "local-constant"):
            raise ValueError(f"unknown basis kind {self.kind!r}")
        if self.degree < 0:
            raise ValueError("degree must be nonnegative")

    def n_features(self, m: int) -> int:
        if self.kind == "local-constant":
            return self.bins
        count = math.comb(m + self.degree, self.degree)
        if self.kind == "path":
            extra = int(self.running_max) + int(self.running_integral)
            count += extra * m * (2 if self.degree >= 2 else 1)
        return count

    def design(self, values: np.ndarray, delta: float) -> "Design":
        return Design(self, np.asarray(values, dtype=float), delta)


class Design:
    """Raw features of one path array, computed node by node."""

    def __init__(self, basis: FeatureBasis, values: np.ndarray, delta: float):
        self.basis = basis
        self.values = values
        self.delta = delta
        self._cummax = None
        self._cumint = None
        if basis.kind == "path":
            if basis.running_max:
                self._cummax = np.maximum.accumulate(values, axis=1)
            if basis.running_integral:
                # left-point sum of x_s delta over s < t_i
                self._cumint = np.concatenate(
                    [np.zeros_like(values[:, :1]), np.cumsum(values[:, :-1], axis=1) * delta], axis=1
                )

    @property
    def n_paths(self) -> int:
        return self.values.shape[0]

    def state(self, i: int) -> np.ndarray:
        return self.values[:, i, :]

    def raw(self, i: int) -> np.ndarray:
        x = self.values[:, i, :]
        P, m = x.shape
        cols = [np.ones(P)]
        for deg in range(1, self.basis.degree + 1):
            for combo in combinations_with_replacement(range(m), deg):
                cols.append(np.prod(x[:, list(combo)], axis=1))
        for extra in (self._cummax, self._cumint):
            if extra is None:
                continue
            for k in range(m):
                cols.append(extra[:, i, k])
                if self.basis.degree >= 2:
                    cols.append(extra[:, i, k] ** 2)
        return np.stack(cols, axis=1)


@dataclass
class Projection:
    """A fitted least-squares projection at one node; reusable on new paths."""

    kind: str
    mean: np.ndarray | None = None
    scale: np.ndarray | None = None
    keep: np.ndarray | None = None
    chol: tuple | None = field(default=None, repr=False)
    edges: np.ndarray | None = None
    _index: np.ndarray | None = field(default=None, repr=False)
    _counts: np.ndarray | None = field(default=None, repr=False)
    _design: np.ndarray | None = field(default=None, repr=False)

    @classmethod
    def fit(cls, design: Design, i: int) -> "Projection":
        P = design.n_paths
        basis = design.basis
        if basis.kind == "local-constant":
            x = design.state(i)
            if x.shape[1] != 1:
                raise BasisError("local-constant basis needs a one-dimensional state")
            x = x[:, 0]
            if basis.bins > P // 10:
                raise BasisError(f"{basis.bins} cells exceed n_paths/10 = {P // 10}")
            qs = np.quantile(x, np.linspace(0.0, 1.0, basis.bins + 1)[1:-1])
            edges = np.unique(qs)
            if np.ptp(x) == 0:
                edges = np.empty(0)
            idx = np.searchsorted(edges, x, side="right")
            counts = np.bincount(idx, minlength=len(edges) + 1).astype(float)
            return cls("local-constant", edges=edges, _index=idx, _counts=counts)
        raw = design.raw(i)
        k = raw.shape[1]
        if k > P / 10:
            raise BasisError(f"{k} features exceed n_paths/10 = {P / 10:g}")
        mean = rng.chunked_mean(raw)
        var = rng.chunked_mean((raw - mean) ** 2)
        scale = np.sqrt(var)
        keep = scale > 1e-12 * (1.0 + np.abs(mean))
        keep[0] = True
        mean[0], scale[0] = 0.0, 1.0
        X = (raw[:, keep] - mean[keep]) / scale[keep]
        X[:, 0] = 1.0
        gram = rng.chunked_gram(X) / P
        eig = np.linalg.eigvalsh(gram)
        if eig[0] <= 0 or eig[-1] / eig[0] > MAX_CONDITION:
            cond = np.inf if eig[0] <= 0 else eig[-1] / eig[0]
            raise BasisError(f"regression design at node {i} is ill-conditioned (condition {cond:.3g})")
        return cls("ls", mean=mean, scale=scale, keep=keep, chol=cho_factor(gram), _design=X)

    def _features(self, raw: np.ndarray) -> np.ndarray:
        X = (raw[:, self.keep] - self.mean[self.keep]) / self.scale[self.keep]
        X[:, 0] = 1.0
        return X

    def coefficients(self, target: np.ndarray) -> np.ndarray:
        """Least-squares weights for ``target`` of shape ``(P, q)`` on the fitted sample."""
        target = target.reshape(target.shape[0], -1)
        if self.kind == "local-constant":
            sums = np.stack(
                [np.bincount(self._index, weights=target[:, j], minlength=len(self._counts)) for j in range(target.shape[1])],
                axis=1,
            )
            return sums / np.maximum(self._counts, 1.0)[:, None]
        rhs = rng.chunked_gram(self._design, target) / target.shape[0]
        return cho_solve(self.chol, rhs)

    def fitted(self, coef: np.ndarray) -> np.ndarray:
        if self.kind == "local-constant":
            return coef[self._index]
        return self._design @ coef

    def predict(self, design: Design, i: int, coef: np.ndarray) -> np.ndarray:
        """Evaluate the fitted field on another path array (out of sample)."""
        if self.kind == "local-constant":
            idx = np.searchsorted(self.edges, design.state(i)[:, 0], side="right")
            return coef[idx]
        return self._features(design.raw(i)) @ coef

    def release(self):
        """Drop the in-sample design to save memory; ``predict`` still works."""
        self._design = None
        self._index = None


def conditional_expectation(values: np.ndarray, delta: float, i: int, target: np.ndarray, basis: FeatureBasis):
    """Regression estimate of ``E[target | path up to node i]`` on the same sample."""
    design = basis.design(values, delta)
    proj = Projection.fit(design, i)
    t = np.asarray(target, dtype=float)
    out = proj.fitted(proj.coefficients(t.reshape(t.shape[0], -1)))
    return out.reshape(t.shape)


@dataclass
class DiscreteSolution:
    """Grid solution of a BSDE on nodes ``start..end`` of a bundle's grid.

    ``Y`` has shape ``(P, L+1, d)`` and ``Z`` has shape ``(P, L, d, n)`` with
    ``L = end - start``; index ``k`` refers to grid node ``start + k``.
    """

    grid: TimeGrid
    start: int
    end: int
    Y: np.ndarray
    Z: np.ndarray
    projections: list = field(repr=False)
    y_coef: list = field(repr=False)
    z_coef: list = field(repr=False)
    basis: FeatureBasis
    iterations: int
    gap: float
    gap_history: list
    residual: np.ndarray
    terminal_fn: Callable | None = field(default=None, repr=False)

    @property
    def d(self) -> int:
        return self.Y.shape[2]

    @property
    def times(self) -> np.ndarray:
        return self.grid.points[self.start: self.end + 1]

    @property
    def z_max(self) -> np.ndarray:
        """Largest Frobenius norm of ``Z`` across paths at each node."""
        return np.max(np.sqrt(np.sum(self.Z**2, axis=(2, 3))), axis=0)

    def y0(self) -> np.ndarray:
        return rng.chunked_mean(self.Y[:, 0, :])

    def y_field(self, i: int, values: np.ndarray) -> np.ndarray:
        """Fitted ``Y`` at grid node ``i`` on new paths ``values`` (shape ``(P, >i, m)``)."""
        k = i - self.start
        if i == self.end and self.terminal_fn is not None:
            return self.terminal_fn(values[:, : i + 1])
        design = self.basis.design(values[:, : i + 1], self.grid.delta)
        return self.projections[k].predict(design, i, self.y_coef[k])

    def z_field(self, i: int, values: np.ndarray) -> np.ndarray:
        k = i - self.start
        design = self.basis.design(values[:, : i + 1], self.grid.delta)
        out = self.projections[k].predict(design, i, self.z_coef[k])
        return out.reshape(values.shape[0], self.d, -1)

    def to_csv(self, path, bound: Callable | None = None):
        write_solution_csv(path, self.times, self.Y, self.Z, bound, self.grid.T)


def write_solution_csv(path, times, Y, Z, bound=None, T=None):
    """Columns: t, Y means, Y stddevs, |Z| mean, |Z| max, sqrt_rho_bound."""
    d = Y.shape[2]
    znorm = np.sqrt(np.sum(Z**2, axis=(2, 3)))
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["t"] + [f"Y{j + 1}_mean" for j in range(d)] + [f"Y{j + 1}_std" for j in range(d)]
                   + ["absZ_mean", "absZ_max", "sqrt_rho_bound"])
        for k, t in enumerate(times):
            ym = rng.chunked_mean(Y[:, k, :])
            ys = np.sqrt(rng.chunked_mean((Y[:, k, :] - ym) ** 2))
            if k < znorm.shape[1]:
                zm, zx = float(rng.chunked_mean(znorm[:, k])), float(np.max(znorm[:, k]))
            else:
                zm = zx = float("nan")
            b = float(bound(T - t)) if bound is not None else float("nan")
            w.writerow([f"{t:.12g}"] + [f"{v:.12g}" for v in ym] + [f"{v:.12g}" for v in ys]
                       + [f"{zm:.12g}", f"{zx:.12g}", f"{b:.12g}"])


def backward_picard(
    values: np.ndarray,
    dW: np.ndarray,
    grid: TimeGrid,
    start: int,
    end: int,
    terminal: np.ndarray,
    driver: Callable,
    basis: FeatureBasis,
    tol: float = 1e-6,
    max_iter: int = 50,
    driver_reads_y: bool = True,
    keep_design: bool = False,
) -> DiscreteSolution:
    """Backward regression sweep on nodes ``start..end`` repeated as a Picard iteration.

    ``values`` are the paths features are built from, ``dW`` the Brownian
    increments ``(P, M, n)``, ``terminal`` the value of ``Y`` at node ``end``
    and ``driver(t, prefix, y, z)`` the total driver.
    """
    P = values.shape[0]
    n = dW.shape[2]
    terminal = np.asarray(terminal, dtype=float).reshape(P, -1)
    d = terminal.shape[1]
    L = end - start
    delta = grid.delta
    design = basis.design(values[:, : end + 1], delta)
    projections = [Projection.fit(design, start + k) for k in range(L)]

    Y = np.empty((P, L + 1, d))
    Y[:, L] = terminal
    Y[:, :L] = rng.chunked_mean(terminal)
    Z = np.zeros((P, L, d, n))
    y_coef = [None] * L
    z_coef = [None] * L
    residual = np.zeros(L + 1)
    history = []
    streak = 0
    iterations = 0
    gap = math.inf
    for it in range(1, max_iter + 1):
        iterations = it
        Y_prev, Z_prev = Y.copy(), Z.copy()
        for k in range(L - 1, -1, -1):
            i = start + k
            proj = projections[k]
            y_next = Y[:, k + 1]
            base = proj.coefficients(y_next)
            centred = y_next - proj.fitted(base)
            target_z = (centred[:, :, None] * dW[:, i, None, :]).reshape(P, d * n) / delta
            zc = proj.coefficients(target_z)
            z = proj.fitted(zc).reshape(P, d, n)
            prefix = values[:, : i + 1]
            F = np.asarray(driver(grid.t(i), prefix, Y_prev[:, k], z), dtype=float).reshape(P, d)
            target_y = y_next + F * delta
            yc = proj.coefficients(target_y)
            y = proj.fitted(yc)
            if not (np.all(np.isfinite(y)) and np.all(np.isfinite(z))):
                bad = np.argwhere(~np.isfinite(y).all(axis=1) | ~np.isfinite(z).all(axis=(1, 2)))
                from .errors import BlowupError

                raise BlowupError("non-finite regression update", int(bad[0, 0]), i)
            residual[k] = math.sqrt(float(rng.chunked_mean(np.sum((target_y - y) ** 2, axis=1))))
            Y[:, k], Z[:, k] = y, z
            y_coef[k], z_coef[k] = yc, zc
        dy = max(math.sqrt(float(rng.chunked_mean(np.sum((Y[:, k] - Y_prev[:, k]) ** 2, axis=1)))) for k in range(L + 1))
        dz = math.sqrt(float(sum(rng.chunked_mean(np.sum((Z[:, k] - Z_prev[:, k]) ** 2, axis=(1, 2))) for k in range(L))) * delta)
        new_gap = dy + dz
        history.append(new_gap)
        if it >= 2 and gap > 0:
            ratio = new_gap / gap
            streak = streak + 1 if ratio >= 1.0 else 0
            if streak >= DIVERGENCE_STREAK:
                raise DivergenceError(
                    f"Picard gap ratio {ratio:.4g} >= 1 for {DIVERGENCE_STREAK} consecutive iterations", ratio, it
                )
        gap = new_gap
        if it >= 2 and gap <= tol:
            break
    if not keep_design:
        for proj in projections:
            proj.release()
    return DiscreteSolution(
        grid, start, end, Y, Z, projections, y_coef, z_coef, basis, iterations, gap, history, residual
    )


def solve_lipschitz_bsde(
    spec,
    bundle: PathBundle,
    basis: FeatureBasis | None = None,
    tol: float = 1e-6,
    max_iter: int = 50,
    start: int = 0,
    end: int | None = None,
    terminal: np.ndarray | None = None,
    driver: Callable | None = None,
    features: np.ndarray | None = None,
    keep_design: bool = False,
) -> DiscreteSolution:
    """Solve ``Y = xi + int F ds - int Z dW`` on grid nodes ``start..end`` of ``bundle``.

    The bundle supplies the Brownian increments. Features and coefficients
    read ``features`` when given (a forward state driven by the same noise),
    otherwise the bundle paths themselves. ``driver`` defaults to the problem's
    ``f + z g``; ``terminal`` defaults to ``xi`` of the path up to ``end``.
    """
    grid = bundle.grid
    end = grid.M if end is None else end
    if not 0 <= start < end <= grid.M:
        raise ValueError("need 0 <= start < end <= M")
    basis = basis or FeatureBasis()
    values = bundle.values if features is None else np.asarray(features, dtype=float)
    if terminal is None:
        terminal = spec.eval_xi(values[:, : end + 1])
    drv = driver if driver is not None else spec.driver
    sol = backward_picard(
        values, bundle.increments(), grid, start, end, terminal, drv, basis, tol, max_iter, True, keep_design
    )
    if end == grid.M and driver is None:
        sol.terminal_fn = spec.eval_xi
    return sol


def stability_gap(spec_a, sol_a: DiscreteSolution, spec_b, sol_b: DiscreteSolution, values: np.ndarray,
                  t_idx: int = 0, C: float | None = None):
    """Both sides of the a-priori stability estimate on ``[t, T]``.

    ``lhs = E sup |dY|^2 + E sum |dZ|^2 delta``
    ``rhs = 6 e^{b(T-t)} (E|d xi|^2 + E sum |F_a(Y_b, Z_b) - F_b(Y_b, Z_b)|^2 delta)``, ``b = 2(C+1)``.
    """
    grid = sol_a.grid
    C = max(spec_a.C, spec_b.C) if C is None else C
    k0 = t_idx - sol_a.start
    dY = sol_a.Y[:, k0:] - sol_b.Y[:, k0:]
    dZ = sol_a.Z[:, k0:] - sol_b.Z[:, k0:]
    delta = grid.delta
    lhs = float(rng.chunked_mean(np.max(np.sum(dY**2, axis=2), axis=1))) + float(
        rng.chunked_mean(np.sum(dZ**2, axis=(1, 2, 3)))
    ) * delta
    dxi = sol_a.Y[:, -1] - sol_b.Y[:, -1]
    dF2 = np.zeros(values.shape[0])
    for k in range(k0, sol_b.Z.shape[1]):
        i = sol_b.start + k
        prefix = values[:, : i + 1]
        fa = spec_a.driver(grid.t(i), prefix, sol_b.Y[:, k], sol_b.Z[:, k])
        fb = spec_b.driver(grid.t(i), prefix, sol_b.Y[:, k], sol_b.Z[:, k])
        dF2 += np.sum((fa - fb) ** 2, axis=1) * delta
    b = 2.0 * (C + 1.0)
    rhs = 6.0 * math.exp(b * (grid.T - grid.t(t_idx))) * (
        float(rng.chunked_mean(np.sum(dxi**2, axis=1))) + float(rng.chunked_mean(dF2))
    )
    return lhs, rhs


@dataclass
class AprioriReport:
    passed: bool
    bound: float
    worst: np.ndarray
    margins: np.ndarray


def apriori_bound_check(spec, sol: DiscreteSolution, values: np.ndarray, slack: float = 0.10,
                        C: float | None = None) -> AprioriReport:
    """Check ``|Y_t|^2 + 1/2 E_t sum_{s>=t} |Z_s|^2 delta <= e^{aT}(C + T/2)``, ``a = 4C + 1/2``.

    ``C`` defaults to the declared constant; pass a smaller one to test the
    check itself.
    """
    C = spec.C if C is None else C
    a = 4.0 * C + 0.5
    T = sol.grid.T
    bound = math.exp(a * T) * (C + T / 2.0)
    L = sol.Z.shape[1]
    znorm2 = np.sum(sol.Z**2, axis=(2, 3)) * sol.grid.delta
    tail = np.concatenate([np.cumsum(znorm2[:, ::-1], axis=1)[:, ::-1], np.zeros((values.shape[0], 1))], axis=1)
    worst = np.empty(L + 1)
    for k in range(L + 1):
        i = sol.start + k
        if k < L:
            cond_tail = conditional_expectation(values[:, : i + 1], sol.grid.delta, i, tail[:, k], sol.basis)
        else:
            cond_tail = np.zeros(values.shape[0])
        worst[k] = float(np.max(np.sum(sol.Y[:, k] ** 2, axis=1) + 0.5 * cond_tail))
    margins = bound * (1.0 + slack) - worst
    return AprioriReport(bool(np.all(margins >= 0)), bound, worst, margins)


def z_bound(spec) -> Callable:
    """``x -> sqrt(rho(x))`` with the declared constants."""
    return lambda x: math.sqrt(max(rho(x, spec.K, spec.C), 0.0)) if np.isfinite(rho(x, spec.K, spec.C)) else math.inf
