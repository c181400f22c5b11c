"""Girsanov weights, a BMO-norm estimate and the FBSDE built from a solved BSDE."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np

from . import rng
from .errors import IntegrandError, PreconditionError
from .paths import PathBundle, TimeGrid
from .regression import FeatureBasis, Projection

__all__ = [
    "GirsanovWeights",
    "stochastic_exponential",
    "bmo_norm_estimate",
    "FbsdeCandidate",
    "fbsde_via_bsde",
    "ResidualReport",
    "fbsde_residual",
    "affine_control_tolerance",
]


@dataclass
class GirsanovWeights:
    """Terminal densities ``exp(-sum theta dW - 1/2 sum |theta|^2 delta)`` per path."""

    weights: np.ndarray
    log_increments: np.ndarray = field(repr=False)
    bound: float

    @property
    def log_weights(self) -> np.ndarray:
        return np.sum(self.log_increments, axis=1)

    def mean_and_se(self):
        w = self.weights
        mean = float(rng.chunked_mean(w))
        se = math.sqrt(float(rng.chunked_mean((w - mean) ** 2)) / len(w))
        return mean, se

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            wr = csv.writer(fh, lineterminator="\n")
            wr.writerow(["path", "weight", "log_weight"])
            for p, (w, lw) in enumerate(zip(self.weights, self.log_weights)):
                wr.writerow([p, f"{w:.12g}", f"{lw:.12g}"])


def _theta_array(theta, bundle: PathBundle) -> np.ndarray:
    P, M, n = bundle.n_paths, bundle.grid.M, bundle.dim
    th = np.asarray(theta, dtype=float)
    if th.ndim == 2:
        th = th[:, :, None]
    th = np.broadcast_to(th, (P, M, n))
    if not np.all(np.isfinite(th)):
        p, i = np.argwhere(~np.isfinite(th).all(axis=2))[0]
        raise IntegrandError(f"integrand is not finite at path {int(p)}, step {int(i)}")
    return th


def stochastic_exponential(theta, bundle: PathBundle) -> GirsanovWeights:
    """Discrete Doleans-Dade exponential of ``-int theta dW`` on the bundle's increments.

    ``theta`` is ``(P, M, n)``, or anything broadcastable to it.
    """
    th = _theta_array(theta, bundle)
    dW = bundle.increments()
    inc = -np.sum(th * dW, axis=2) - 0.5 * np.sum(th**2, axis=2) * bundle.grid.delta
    return GirsanovWeights(np.exp(np.sum(inc, axis=1)), inc, float(np.max(np.abs(th))))


def bmo_norm_estimate(theta, bundle: PathBundle, basis: FeatureBasis | None = None) -> float:
    """``max_t`` of the regressed ``E_t sum_{s>=t} |theta_s|^2 delta``, square-rooted.

    Deterministic grid times stand in for stopping times, so this bounds the
    true norm from below.
    """
    th = _theta_array(theta, bundle)
    basis = basis or FeatureBasis("polynomial", 2)
    delta = bundle.grid.delta
    sq = np.sum(th**2, axis=2) * delta
    tail = np.cumsum(sq[:, ::-1], axis=1)[:, ::-1]
    design = basis.design(bundle.values, delta)
    best = 0.0
    for i in range(bundle.grid.M):
        target = tail[:, i]
        if np.ptp(target) == 0:
            est = float(target[0])
        else:
            proj = Projection.fit(design, i)
            est = float(np.max(proj.fitted(proj.coefficients(target[:, None]))))
        best = max(best, est)
    return math.sqrt(max(best, 0.0))


@dataclass
class FbsdeCandidate:
    grid: TimeGrid
    P: np.ndarray = field(repr=False)
    Q: np.ndarray = field(repr=False)
    R: np.ndarray = field(repr=False)
    drift: np.ndarray = field(repr=False)
    dW: np.ndarray = field(repr=False)
    bmo: float = 0.0


def fbsde_via_bsde(spec, solution, bundle: PathBundle, drift_limit: float | None = None,
                   bmo_basis: FeatureBasis | None = None) -> FbsdeCandidate:
    """Forward state ``dP = g(t, P, y(t,P), z(t,P)) dt + dW`` with ``Q = y(t,P)``, ``R = z(t,P)``.

    ``solution`` is a solved BSDE (a ``DiscreteSolution`` or anything with
    ``.solution``) whose fields are functions of the current state. The drift
    must stay finite; with ``drift_limit`` its sup is also checked.
    """
    sol = getattr(solution, "solution", solution)
    if not spec.markovian or sol.basis.kind == "path":
        raise PreconditionError("fields can only be frozen for Markovian problems and state-only bases")
    if spec.sigma is not None:
        raise PreconditionError("the forward state here is driven by dW with identity volatility")
    grid = bundle.grid
    if grid.M != sol.grid.M or grid.T != sol.grid.T:
        raise PreconditionError("fresh bundle must share the solution's grid")
    Pn, M, m = bundle.n_paths, grid.M, spec.m
    dW = bundle.increments()
    X = np.empty((Pn, M + 1, m))
    X[:, 0] = bundle.values[:, 0, :m]
    Q = np.empty((Pn, M + 1, spec.d))
    R = np.empty((Pn, M, spec.d, spec.n))
    drift = np.empty((Pn, M, spec.n))
    for i in range(M):
        prefix = X[:, : i + 1]
        Q[:, i] = sol.y_field(i, prefix)
        R[:, i] = sol.z_field(i, prefix)
        g = spec.eval_g(grid.t(i), prefix, Q[:, i], R[:, i])
        if not np.all(np.isfinite(g)):
            raise PreconditionError(f"drift through the frozen fields is not finite at step {i}")
        if drift_limit is not None and float(np.max(np.abs(g))) > drift_limit:
            raise PreconditionError(f"drift bound {float(np.max(np.abs(g))):.6g} exceeds {drift_limit:.6g} at step {i}")
        drift[:, i] = g
        X[:, i + 1] = X[:, i] + g * grid.delta + dW[:, i, :m]
    Q[:, M] = spec.eval_xi(X) if sol.terminal_fn is None else sol.terminal_fn(X)
    bmo = bmo_norm_estimate(drift, PathBundle(grid, X, bundle.seed, "forward-state"), bmo_basis)
    return FbsdeCandidate(grid, X, Q, R, drift, dW, bmo)


@dataclass
class ResidualReport:
    terminal: float
    backward: float
    forward: float

    @property
    def worst(self) -> float:
        return max(self.terminal, self.backward, self.forward)

    def text(self) -> str:
        return ("residual report\n"
                f"  terminal mismatch: {self.terminal:.6g}\n"
                f"  backward residual: {self.backward:.6g}\n"
                f"  forward residual: {self.forward:.6g}")


def _l2(x) -> float:
    x = x.reshape(x.shape[0], -1)
    return math.sqrt(float(rng.chunked_mean(np.sum(x**2, axis=1))))


def fbsde_residual(candidate: FbsdeCandidate, spec) -> ResidualReport:
    """L2 mismatches of the terminal condition and of both integral equations.

    Backward: ``max_t |Q_t - Q_T - sum_{s>=t} f delta + sum_{s>=t} R dW|``.
    Forward: ``max_t |P_t - P_0 - sum_{s<t} g(Q, R) delta - sum_{s<t} dW|``.
    """
    grid = candidate.grid
    P, Q, R, dW = candidate.P, candidate.Q, candidate.R, candidate.dW
    M = grid.M
    n_paths = P.shape[0]
    d = Q.shape[2]
    terminal = _l2(Q[:, M] - spec.eval_xi(P))
    f_int = np.zeros((n_paths, d))
    stoch = np.zeros((n_paths, d))
    backward = 0.0
    for i in range(M - 1, -1, -1):
        prefix = P[:, : i + 1]
        f_int += spec.eval_f(grid.t(i), prefix, Q[:, i], R[:, i]) * grid.delta
        stoch += np.einsum("pdn,pn->pd", R[:, i], dW[:, i])
        backward = max(backward, _l2(Q[:, i] - Q[:, M] - f_int + stoch))
    drift_int = np.zeros((n_paths, P.shape[2]))
    forward = 0.0
    for i in range(M):
        g = spec.eval_g(grid.t(i), P[:, : i + 1], Q[:, i], R[:, i])
        drift_int += g * grid.delta + dW[:, i, : P.shape[2]]
        forward = max(forward, _l2(P[:, i + 1] - P[:, 0] - drift_int))
    return ResidualReport(terminal, backward, forward)


def affine_control_tolerance(exact_residual: ResidualReport, grid: TimeGrid, n_paths: int) -> float:
    """Discretization plus Monte Carlo scale: exact-candidate residual + sqrt(T/P) + T/M."""
    return exact_residual.worst + math.sqrt(grid.T / n_paths) + grid.T / grid.M
