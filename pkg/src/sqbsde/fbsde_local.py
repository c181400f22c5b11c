"""Small-interval coupled FBSDE: the Picard map on triples, its fixed point,
the decoupling field at the left endpoint and an adaptedness diagnostic.

Everything lives on the grid of the driving bundle. The interval is
``[t_u, T]`` with ``u`` a grid index; nodes before ``u`` come from the
supplied prefix and are never read from the bundle.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np

from . import rng
from .constants import contraction_lhs
from .errors import DivergenceError, SolverError
from .paths import STREAM_PREFIX, PathBundle, PathPrefix, concat_paths
from .regression import DiscreteSolution, FeatureBasis, Projection, backward_picard

__all__ = [
    "LocalFbsdeSolution",
    "picard_map",
    "solve_local_fbsde",
    "decoupling_lipschitz_probe",
    "adaptedness_diagnostic",
    "triple_gap",
    "random_prefix_pairs",
]


def _u_index(bundle: PathBundle, u) -> int:
    if isinstance(u, (int, np.integer)):
        idx = int(u)
    else:
        idx = bundle.grid.index_of(float(u))
    if not 0 <= idx < bundle.grid.M:
        raise ValueError("u must be a grid node strictly before T")
    return idx


def _spliced_start(prefix: PathPrefix, P: int, M: int, m: int) -> np.ndarray:
    """Prefix followed by its terminal value held constant (the zero triple's path)."""
    tail = np.broadcast_to(prefix.terminal[..., None, :], prefix.terminal.shape[:-1] + (M - prefix.u_idx + 1, m))
    out = concat_paths(prefix, np.array(tail), n_points=M + 1)
    return np.broadcast_to(out, (P, M + 1, m)).copy()


def triple_gap(a, b, u_idx: int, delta: float):
    """Squared S2 gaps of X and Y, squared H2 gap of Z, each on ``[t_u, T]``."""
    (Xa, Ya, Za), (Xb, Yb, Zb) = a, b
    gx = float(rng.chunked_mean(np.max(np.sum((Xa[:, u_idx:] - Xb[:, u_idx:]) ** 2, axis=2), axis=1)))
    gy = float(rng.chunked_mean(np.max(np.sum((Ya - Yb) ** 2, axis=2), axis=1)))
    gz = float(rng.chunked_mean(np.sum((Za - Zb) ** 2, axis=(1, 2, 3)))) * delta
    return gx, gy, gz


def picard_map(prev, spec, prefix: PathPrefix, bundle: PathBundle, basis: FeatureBasis | None = None,
               tol: float = 1e-9, max_iter: int = 50, iteration: int = 0):
    """One application ``(P, Q, R) -> (X, Y, Z)``.

    ``P`` is a spliced path array ``(n_paths, M+1, m)``; ``Q`` is
    ``(n_paths, L+1, d)`` and ``R`` is ``(n_paths, L, d, n)`` on nodes ``u..M``.
    Returns ``(X, Y, Z, bsde_solution)``.
    """
    P_path, Q, R = prev
    grid = bundle.grid
    u = prefix.u_idx
    M = grid.M
    n_paths = bundle.n_paths
    m = spec.m
    dW = bundle.increments()
    basis = basis or FeatureBasis("polynomial", 1)
    try:
        X = np.empty((n_paths, M + 1, m))
        X[:, : u + 1] = prefix.broadcast(n_paths)
        for i in range(u, M):
            k = i - u
            t = grid.t(i)
            drift = spec.eval_g(t, P_path[:, : i + 1], Q[:, k], R[:, k])
            if spec.g is None:
                drift = np.zeros((n_paths, m))
            step = drift.reshape(n_paths, m) * grid.delta
            if spec.sigma is None:
                step = step + dW[:, i, :m]
            else:
                step = step + np.einsum("pmn,pn->pm", spec.eval_sigma(t, P_path[:, : i + 1]), dW[:, i])
            X[:, i + 1] = X[:, i] + step
            if not np.all(np.isfinite(X[:, i + 1])):
                from .errors import BlowupError

                p = int(np.argwhere(~np.isfinite(X[:, i + 1]).all(axis=1))[0, 0])
                raise BlowupError("non-finite forward update", p, i)
        terminal = spec.eval_xi(X)
        sol = backward_picard(X, dW, grid, u, M, terminal, spec.eval_f, basis, tol, max_iter, keep_design=False)
    except SolverError as exc:
        exc.outer_iteration = iteration
        if exc.args:
            exc.args = (f"outer iteration {iteration}: {exc.args[0]}",) + exc.args[1:]
        raise
    return X, sol.Y, sol.Z, sol


@dataclass
class LocalFbsdeSolution:
    u_idx: int
    prefix: PathPrefix = field(repr=False)
    X: np.ndarray = field(repr=False)
    Y: np.ndarray = field(repr=False)
    Z: np.ndarray = field(repr=False)
    bsde: DiscreteSolution = field(repr=False)
    log: list
    iterations: int
    converged: bool
    brownian: np.ndarray = field(repr=False)

    @property
    def k_hat(self) -> np.ndarray:
        """Decoupling snapshot ``k(u, prefix)`` on each path."""
        return self.Y[:, 0]

    def decoupling_field(self, values: np.ndarray) -> np.ndarray:
        """Evaluate the fitted field at ``u`` on other spliced paths."""
        return self.bsde.y_field(self.u_idx, values)

    @property
    def ratios(self) -> list:
        return [row["ratio"] for row in self.log if row["ratio"] is not None]

    def log_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["iteration", "triple_gap", "triple_gap_squared", "ratio"])
            for row in self.log:
                r = "" if row["ratio"] is None else f"{row['ratio']:.12g}"
                w.writerow([row["iteration"], f"{row['gap']:.12g}", f"{row['gap_sq']:.12g}", r])


def solve_local_fbsde(spec, u, prefix: PathPrefix | np.ndarray, bundle: PathBundle,
                      tol: float = 1e-6, max_iter: int = 50, basis: FeatureBasis | None = None,
                      inner_tol_ratio: float = 1e-3) -> LocalFbsdeSolution:
    """Iterate the Picard map from ``(x_u, 0, 0)`` until the triple gap is at most ``tol``.

    The logged gap is ``|dX|_S2 + |dY|_S2 + |dZ|_H2``; ratios are taken on
    the squared sum, the quantity the contraction constant bounds.
    """
    if not tol > 0:
        raise ValueError("tol must be positive")
    u_idx = _u_index(bundle, u)
    if not isinstance(prefix, PathPrefix):
        prefix = PathPrefix(u_idx, prefix)
    if prefix.u_idx != u_idx:
        raise ValueError("prefix length does not match u")
    grid = bundle.grid
    n_paths, M, m, d, n = bundle.n_paths, grid.M, spec.m, spec.d, spec.n
    L = M - u_idx
    P_path = _spliced_start(prefix, n_paths, M, m)
    Q = np.zeros((n_paths, L + 1, d))
    R = np.zeros((n_paths, L, d, n))
    log = []
    streak = 0
    prev_sq = None
    converged = False
    sol = None
    it = 0
    for it in range(1, max_iter + 1):
        X, Y, Z, sol = picard_map((P_path, Q, R), spec, prefix, bundle, basis, tol * inner_tol_ratio,
                                  max_iter, iteration=it)
        gx, gy, gz = triple_gap((X, Y, Z), (P_path, Q, R), u_idx, grid.delta)
        gap = math.sqrt(gx) + math.sqrt(gy) + math.sqrt(gz)
        gap_sq = gx + gy + gz
        ratio = None if prev_sq is None or prev_sq == 0 else gap_sq / prev_sq
        log.append({"iteration": it, "gap": gap, "gap_sq": gap_sq, "ratio": ratio})
        P_path, Q, R = X, Y, Z
        if gap <= tol:
            converged = True
            break
        if ratio is not None:
            streak = streak + 1 if ratio >= 1.0 else 0
            if streak >= 3:
                raise DivergenceError(f"contraction failure: measured ratio {ratio:.4g}", ratio, it)
        prev_sq = gap_sq
    W = bundle.values
    return LocalFbsdeSolution(u_idx, prefix, P_path, Q, R, sol, log, it, converged, W)


def contraction_constant(spec, eps: float) -> float:
    """Analytic contraction constant for the problem's constants at interval length ``eps``."""
    return contraction_lhs(spec.C, spec.C_g or 0.0, spec.K, eps)


def random_prefix_pairs(u_idx: int, m: int, delta: float, n_pairs: int, seed: int):
    """Pairs of shared prefixes on nodes ``0..u_idx``; odd pairs differ at one node only."""
    out = []
    for k in range(n_pairs):
        z = rng.normals(seed, STREAM_PREFIX, 4 * k, 2 * (u_idx + 1), m)
        a = np.cumsum(z[: u_idx + 1], axis=0) * math.sqrt(delta)
        b = np.cumsum(z[u_idx + 1:], axis=0) * math.sqrt(delta)
        if k % 2 == 1:
            node = int(rng.uniforms(seed, STREAM_PREFIX, 4 * k + 1, 0, 0, 1)[0] * (u_idx + 1))
            b = a.copy()
            b[min(node, u_idx)] += 0.25 * rng.normals(seed, STREAM_PREFIX, 4 * k + 2, 1, m)[0]
        out.append((a, b))
    return out


def decoupling_lipschitz_probe(spec, u, bundle: PathBundle, n_prefix_pairs: int = 5, seed: int = 0,
                               tol: float = 1e-6, max_iter: int = 50, basis: FeatureBasis | None = None):
    """Largest ``|k(u,x) - k(u,x')|^2 / sup|x - x'|^2`` over sampled prefix pairs.

    Both prefixes of a pair are solved on the same bundle, so the noise in
    the two estimates is shared and largely cancels in the difference.
    """
    u_idx = _u_index(bundle, u)
    pairs = random_prefix_pairs(u_idx, spec.m, bundle.grid.delta, n_prefix_pairs, seed)
    worst = 0.0
    for a, b in pairs:
        ka = solve_local_fbsde(spec, u_idx, PathPrefix(u_idx, a), bundle, tol, max_iter, basis)
        kb = solve_local_fbsde(spec, u_idx, PathPrefix(u_idx, b), bundle, tol, max_iter, basis)
        num = float(np.sum((rng.chunked_mean(ka.k_hat) - rng.chunked_mean(kb.k_hat)) ** 2))
        den = float(np.max(np.sum((a - b) ** 2, axis=1)))
        if den > 0:
            worst = max(worst, num / den)
    return worst


def _r2(values: np.ndarray, delta: float, i: int, target: np.ndarray, basis: FeatureBasis):
    var = float(np.sum(rng.chunked_mean((target - rng.chunked_mean(target)) ** 2)))
    if var <= 1e-300:
        return None
    proj = Projection.fit(basis.design(values[:, : i + 1], delta), i)
    resid = target - proj.fitted(proj.coefficients(target))
    return 1.0 - float(np.sum(rng.chunked_mean(resid**2))) / var


def adaptedness_diagnostic(solution: LocalFbsdeSolution, basis: FeatureBasis | None = None) -> float:
    """Smallest ratio over nodes of R2 on forward-state features to R2 on Brownian features.

    A value near 1 means the forward state explains the backward pair as well
    as the driving noise does. Nodes where the pair has no variance count as 1.
    """
    basis = basis or solution.bsde.basis
    grid = solution.bsde.grid
    u = solution.u_idx
    worst = 1.0
    for k in range(1, solution.Z.shape[1]):
        i = u + k
        target = np.concatenate([solution.Y[:, k], solution.Z[:, k].reshape(solution.Z.shape[0], -1)], axis=1)
        rx = _r2(solution.X, grid.delta, i, target, basis)
        rw = _r2(solution.brownian, grid.delta, i, target, basis)
        if rx is None or rw is None or rw <= 1e-12:
            continue
        worst = min(worst, rx / rw)
    return worst
