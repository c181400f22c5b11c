"""Skorokhod maps on intervals and polyhedra, SDE solution maps and reflected SDEs.

A polyhedral domain is ``G = {x : <n_i, x> >= c_i}`` with unit inward normals
``n_i`` and unit reflection directions ``v_i``. The discrete Skorokhod map
moves by each path increment and then pushes the point back into ``G`` along
the directions of the faces it lands on.
"""

from __future__ import annotations

import csv
import itertools
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.optimize import linprog, nnls

from . import rng
from .errors import BlowupError, PreconditionError, ReflectionError
from .paths import STREAM_PROBE, BrownianSource, PathBundle

__all__ = [
    "ReflectionSpec",
    "ReflectedPath",
    "skorokhod_1d",
    "skorokhod_polyhedral",
    "sde_lipschitz_map",
    "sde_map_constant",
    "reflected_composition_constant",
    "reflected_sde",
    "lipschitz_ratio",
    "measure_skorokhod_constant",
    "DOMAIN_TOL",
    "PROJECTION_CAP",
]

DOMAIN_TOL = 1e-12
PROJECTION_CAP = 100
_UNIT_TOL = 1e-9


def _interior_margin(normals: np.ndarray, offsets: np.ndarray) -> float:
    """Largest ``s <= 1`` with a point ``x`` satisfying ``<n_i, x> - c_i >= s`` for all ``i``."""
    k, n = normals.shape
    if k == 0:
        return 1.0
    # variables (x, s); minimize -s subject to -<n_i, x> + s <= -c_i
    cost = np.zeros(n + 1)
    cost[-1] = -1.0
    a_ub = np.hstack([-normals, np.ones((k, 1))])
    bounds = [(None, None)] * n + [(None, 1.0)]
    res = linprog(cost, A_ub=a_ub, b_ub=-offsets, bounds=bounds, method="highs")
    if res.status == 3:
        return 1.0
    if not res.success:
        return -math.inf
    return float(-res.fun)


def _cone_separates(normals: np.ndarray, directions: np.ndarray) -> bool:
    """Is there ``n`` in the cone of ``normals`` with ``<n, v> > 0`` for every ``v``?"""
    # find mu >= 0 with <sum mu_i n_i, v_j> >= 1 for all j
    gram = directions @ normals.T
    res = linprog(np.zeros(normals.shape[0]), A_ub=-gram, b_ub=-np.ones(directions.shape[0]),
                  bounds=[(0, None)] * normals.shape[0], method="highs")
    return bool(res.status == 0)


@dataclass
class ReflectionSpec:
    """Half-spaces ``<n_i, x> >= c_i`` with oblique directions ``v_i``.

    Construction validates unit lengths and ``<v_i, n_i> > 0``, probes a
    nonempty interior, and records the three sufficient conditions as flags:

    * ``cond_i``: normal reflection, or else the weighted diagonal-dominance
      check (exact linear algebra),
    * ``cond_ii``: the projection lands on the boundary with ``y - pi(y)`` a
      nonpositive multiple of an admissible direction (probed),
    * ``cond_iii``: at probed boundary points some normal is positive on the
      whole direction cone (probed by linear programming).
    """

    normals: np.ndarray
    offsets: np.ndarray
    directions: np.ndarray | None = None
    n_probes: int = 256
    seed: int = 0
    cond_i: bool = field(init=False)
    cond_ii: bool = field(init=False)
    cond_iii: bool = field(init=False)
    interior_margin: float = field(init=False)
    dominance_weights: np.ndarray | None = field(init=False, repr=False)

    def __post_init__(self):
        N = np.atleast_2d(np.asarray(self.normals, dtype=float))
        c = np.atleast_1d(np.asarray(self.offsets, dtype=float))
        if N.size == 0:
            raise ReflectionError("use ReflectionSpec.free(dim) for an unconstrained domain")
        V = N.copy() if self.directions is None else np.atleast_2d(np.asarray(self.directions, dtype=float))
        if c.shape != (N.shape[0],) or V.shape != N.shape:
            raise ReflectionError("normals, offsets and directions disagree in shape")
        self._set(N, c, V)

    @classmethod
    def free(cls, dim: int) -> "ReflectionSpec":
        """``G = R^dim``: no faces, projection is the identity."""
        obj = cls.__new__(cls)
        obj.n_probes, obj.seed = 0, 0
        obj._set(np.zeros((0, dim)), np.zeros(0), np.zeros((0, dim)))
        return obj

    @classmethod
    def interval(cls, a: float, b: float | None = None) -> "ReflectionSpec":
        if b is None:
            return cls(np.array([[1.0]]), np.array([a]))
        if not a < b:
            raise ReflectionError("interval needs a < b")
        return cls(np.array([[1.0], [-1.0]]), np.array([a, -b]))

    def _set(self, N, c, V):
        if N.shape[0]:
            if np.any(np.abs(np.linalg.norm(N, axis=1) - 1.0) > _UNIT_TOL):
                raise ReflectionError("normals must be unit vectors")
            if np.any(np.abs(np.linalg.norm(V, axis=1) - 1.0) > _UNIT_TOL):
                raise ReflectionError("directions must be unit vectors")
            bad = np.flatnonzero(np.sum(N * V, axis=1) <= 0)
            if bad.size:
                raise ReflectionError(f"direction {int(bad[0])} is not inward: <v_i, n_i> <= 0")
        self.normals, self.offsets, self.directions = N, c, V
        self.interior_margin = _interior_margin(N, c)
        if not self.interior_margin > 0:
            raise ReflectionError("the domain has empty interior")
        self._box = None
        self._box = self.box_bounds
        self.dominance_weights = self._dominance()
        self.cond_i = self.normal_reflection or self.dominance_weights is not None
        self.cond_ii, self.cond_iii = self._probe_conditions()

    @property
    def dim(self) -> int:
        return self.normals.shape[1]

    @property
    def n_faces(self) -> int:
        return self.normals.shape[0]

    @property
    def normal_reflection(self) -> bool:
        """Directions equal the normals, which satisfies the first two conditions outright."""
        return bool(np.array_equal(self.normals, self.directions))

    @property
    def valid(self) -> bool:
        return self.cond_i and self.cond_ii and self.cond_iii

    @property
    def coupling(self) -> np.ndarray:
        """``A_ij = <n_i, v_j>``."""
        return self.normals @ self.directions.T

    def slack(self, x: np.ndarray) -> np.ndarray:
        """``<n_i, x> - c_i`` for every face, shape ``x.shape[:-1] + (k,)``."""
        return x @ self.normals.T - self.offsets

    def contains(self, x, tol: float = DOMAIN_TOL) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if self.n_faces == 0:
            return np.ones(x.shape[:-1], dtype=bool)
        return np.all(self.slack(x) >= -tol, axis=-1)

    def boundary_distance(self, x: np.ndarray) -> np.ndarray:
        """Distance to the nearest face hyperplane (the distance to the boundary for points in G)."""
        if self.n_faces == 0:
            return np.full(x.shape[:-1], np.inf)
        return np.min(self.slack(x), axis=-1)

    def active_faces(self, x: np.ndarray, tol: float = 1e-9) -> np.ndarray:
        return np.abs(self.slack(x)) <= tol

    def _dominance(self):
        """Weights ``a > 0`` with ``a_i <n_i, v_i> > sum_{j != i} a_j |<n_i, v_j>|``, or ``None``.

        The comparison matrix ``B`` (diagonal ``<n_i, v_i>``, off-diagonal
        ``-|<n_i, v_j>|``) is a Z-matrix, so such weights exist exactly when
        ``B a = 1`` has a positive solution.
        """
        k = self.n_faces
        if k == 0:
            return np.zeros(0)
        A = self.coupling
        B = -np.abs(A)
        B[np.diag_indices(k)] = np.diag(A)
        try:
            a = np.linalg.solve(B, np.ones(k))
        except np.linalg.LinAlgError:
            return None
        if not np.all(np.isfinite(a)) or np.any(a <= 0):
            return None
        return a

    def row_dominance(self) -> np.ndarray:
        """Per-face margin ``<n_i, v_i> - sum_{j != i} |<n_i, v_j>|`` (unit weights)."""
        A = np.abs(self.coupling)
        return np.diag(self.coupling) - (A.sum(axis=1) - np.diag(A))

    def _probe_points(self, count: int) -> np.ndarray:
        z = rng.normals(self.seed, STREAM_PROBE, 0, count, self.dim)
        scale = 1.0 + np.max(np.abs(self.offsets)) if self.n_faces else 1.0
        return 2.0 * scale * z

    def _probe_conditions(self):
        if self.n_faces == 0 or self.n_probes == 0:
            return True, True
        y = self._probe_points(self.n_probes)
        ok_ii = True
        try:
            x, _ = _project_exact(self, y)
        except ReflectionError:
            return False, False
        inside = self.contains(y)
        if not np.array_equal(x[inside], y[inside]):
            ok_ii = False
        ok_iii = True
        for p in np.flatnonzero(~inside):
            act = self.active_faces(x[p])
            if not np.all(self.slack(x[p]) >= -1e-9) or not act.any():
                ok_ii = False
                continue
            # y - pi(y) must be -sum_{i in I} lam_i v_i with lam >= 0
            _, resid = nnls(self.directions[act].T, x[p] - y[p])
            if resid > 1e-8 * (1.0 + np.linalg.norm(y[p])):
                ok_ii = False
            if not _cone_separates(self.normals[act], self.directions[act]):
                ok_iii = False
        return ok_ii, ok_iii

    @property
    def box_bounds(self):
        """``(lo, hi)`` when G is a coordinate box with normal reflection, else ``None``."""
        if not self.n_faces or not self.normal_reflection:
            return None
        N = self.normals
        axis = np.argmax(np.abs(N), axis=1)
        if not np.array_equal(np.abs(N), np.eye(self.dim)[axis]):
            return None
        lo = np.full(self.dim, -np.inf)
        hi = np.full(self.dim, np.inf)
        for i, j in enumerate(axis):
            if N[i, j] > 0:
                lo[j] = max(lo[j], self.offsets[i])
            else:
                hi[j] = min(hi[j], -self.offsets[i])
        return lo, hi

    def project(self, y: np.ndarray) -> np.ndarray:
        """One application of the oblique projection ``pi``; points of G are returned unchanged.

        For a box with normal reflection the projection is coordinatewise clipping.
        """
        if self._box is not None:
            return np.clip(y, self._box[0], self._box[1])
        return _project_exact(self, np.asarray(y, dtype=float), strict=False)[0]

    def report(self) -> str:
        lines = ["reflection domain",
                 f"  faces: {self.n_faces}",
                 f"  interior margin: {self.interior_margin:.6g}",
                 f"  normal reflection: {'yes' if self.normal_reflection else 'no'}",
                 f"  weighted diagonal dominance: {'pass' if self.dominance_weights is not None else 'fail'}",
                 f"  condition (i): {'pass' if self.cond_i else 'fail'}"]
        if self.n_faces:
            lines.append("  unit-weight row margins: " + ", ".join(f"{m:.6g}" for m in self.row_dominance()))
        lines += [f"  condition (ii) projection probes: {'pass' if self.cond_ii else 'fail'}",
                  f"  condition (iii) normal cone probes: {'pass' if self.cond_iii else 'fail'}"]
        return "\n".join(lines)


def _project_exact(spec: ReflectionSpec, y: np.ndarray, strict: bool = True):
    """Solve ``x = y + sum_S lam_i v_i`` in G with ``lam >= 0`` and complementarity.

    Active sets are enumerated by size. Rows with no admissible active set
    either raise (``strict``) or take one step along the most violated face.
    Returns ``(x, resolved_mask)``.
    """
    x = np.array(y, dtype=float, copy=True)
    if spec.n_faces == 0:
        return x, np.ones(x.shape[:-1], dtype=bool)
    flat = x.reshape(-1, spec.dim)
    s = spec.slack(flat)
    todo = np.any(s < -DOMAIN_TOL, axis=1)
    resolved = ~todo
    A = spec.coupling
    k = spec.n_faces
    for size in range(1, k + 1):
        if not todo.any():
            break
        for S in itertools.combinations(range(k), size):
            rows = np.flatnonzero(todo)
            if rows.size == 0:
                break
            S = list(S)
            A_SS = A[np.ix_(S, S)]
            if abs(np.linalg.det(A_SS)) < 1e-14:
                continue
            lam = np.linalg.solve(A_SS, -s[rows][:, S].T).T
            cand = flat[rows] + lam @ spec.directions[S]
            w = spec.slack(cand)
            ok = np.all(lam >= -DOMAIN_TOL, axis=1) & np.all(w >= -DOMAIN_TOL, axis=1)
            hit = rows[ok]
            flat[hit] = cand[ok]
            todo[hit] = False
            resolved[hit] = True
    if todo.any():
        if strict:
            raise ReflectionError("no admissible active set for the oblique projection")
        rows = np.flatnonzero(todo)
        worst = np.argmin(s[rows], axis=1)
        step = -s[rows, worst] / A[worst, worst]
        flat[rows] += step[:, None] * spec.directions[worst]
    return flat.reshape(x.shape), resolved.reshape(x.shape[:-1])


@dataclass
class ReflectedPath:
    """Constrained path, cumulative regulator ``Psi`` and total-variation increments.

    ``values`` and ``regulator`` share the input path's shape; ``dl`` holds the
    per-step total-variation increments ``|dPsi|``.
    """

    values: np.ndarray
    regulator: np.ndarray = field(repr=False)
    dl: np.ndarray = field(repr=False)

    @property
    def l(self) -> np.ndarray:
        zero = np.zeros(self.dl.shape[:-1] + (1,))
        return np.concatenate([zero, np.cumsum(self.dl, axis=-1)], axis=-1)

    def to_csv(self, path, times: np.ndarray | None = None, max_paths: int = 10):
        v = self.values if self.values.ndim == 3 else self.values[..., None]
        if v.ndim == 2:
            v = v[None]
        l = self.l if self.l.ndim == 2 else self.l[None]
        L = v.shape[1]
        times = np.arange(L) if times is None else times
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["path", "t"] + [f"x{j + 1}" for j in range(v.shape[2])] + ["l"])
            for p in range(min(max_paths, v.shape[0])):
                for i in range(L):
                    w.writerow([p, f"{times[i]:.12g}"] + [f"{val:.12g}" for val in v[p, i]] + [f"{l[p, i]:.12g}"])


def skorokhod_1d(path, a: float, b: float | None = None) -> ReflectedPath:
    """Discrete Skorokhod map on ``[a, b]`` (or ``[a, inf)`` when ``b`` is None), time on the last axis.

    The scheme keeps the regulator ``Psi`` and sets
    ``x_{i+1} = clip(phi_{i+1} + Psi_i, a, b)``, ``Psi_{i+1} = Psi_i + (x_{i+1} - phi_{i+1} - Psi_i)``
    so the regulator moves only on steps that hit a barrier;
    for the one-sided case this is the running-maximum formula.
    """
    phi = np.asarray(path, dtype=float)
    hi = math.inf if b is None else float(b)
    if not a < hi:
        raise ReflectionError("interval needs a < b")
    start = phi[..., 0]
    if np.any(start < a) or np.any(start > hi):
        raise ReflectionError(f"path starts outside [{a}, {b if b is not None else 'inf'}]")
    x = np.empty_like(phi)
    psi = np.empty_like(phi)
    x[..., 0] = start
    psi[..., 0] = 0.0
    cur = np.zeros(phi.shape[:-1])
    for i in range(1, phi.shape[-1]):
        y = phi[..., i] + cur
        xi = np.clip(y, a, hi)
        cur = cur + (xi - y)
        x[..., i] = xi
        psi[..., i] = cur
    return ReflectedPath(x, psi, np.abs(np.diff(psi, axis=-1)))


def _push(spec: ReflectionSpec, y: np.ndarray, step: int, cap: int):
    """Apply ``pi`` until every row is in G; return the point and the iteration count."""
    if spec._box is not None:
        return spec.project(y), 1
    x = y
    for it in range(cap + 1):
        out = ~spec.contains(x)
        if not out.any():
            return x, it
        if it == cap:
            p = int(np.flatnonzero(out.reshape(-1))[0])
            raise ReflectionError(f"projection did not reach the domain within {cap} iterations at step {step} (path {p})")
        x = x.copy()
        x[out] = spec.project(x[out])
    return x, cap


def skorokhod_polyhedral(path, spec: ReflectionSpec, cap: int = PROJECTION_CAP,
                         require_conditions: bool = True) -> ReflectedPath:
    """Discrete Skorokhod map for a polyhedral domain; ``path`` is ``(P, L, n)`` or ``(L, n)``."""
    if require_conditions and not spec.valid:
        raise ReflectionError("reflection conditions (i)-(iii) are not all satisfied:\n" + spec.report())
    phi = np.asarray(path, dtype=float)
    single = phi.ndim == 2
    if single:
        phi = phi[None]
    if phi.shape[-1] != spec.dim:
        raise ReflectionError("path dimension does not match the domain")
    if not np.all(spec.contains(phi[:, 0])):
        raise ReflectionError("path starts outside the domain")
    P, L, n = phi.shape
    x = np.empty_like(phi)
    psi = np.zeros_like(phi)
    x[:, 0] = phi[:, 0]
    cur = np.zeros((P, n))
    for i in range(1, L):
        y = phi[:, i] + cur if spec.n_faces else phi[:, i]
        xi, _ = _push(spec, y, i, cap)
        if spec.n_faces:
            cur = cur + (xi - y)
        x[:, i] = xi
        psi[:, i] = cur
    out = ReflectedPath(x, psi, np.linalg.norm(np.diff(psi, axis=1), axis=2))
    if single:
        out = ReflectedPath(out.values[0], out.regulator[0], out.dl[0])
    return out


def _driver_prefix(values: np.ndarray, i: int) -> np.ndarray:
    return values[:, : i + 1]


def _sigma_matrix(sigma_f, t: float, m: int, n: int) -> np.ndarray | None:
    if sigma_f is None:
        return None
    s = np.asarray(sigma_f(t), dtype=float)
    if s.ndim == 0:
        return s * np.eye(m, n)
    return s.reshape(m, n)


def _euler_increment(b_f, sigma_f, t, dt, phi_prefix, m_prefix, dM):
    P, m = phi_prefix.shape[0], phi_prefix.shape[2]
    step = np.zeros((P, m))
    if b_f is not None:
        step = step + np.asarray(b_f(t, phi_prefix, m_prefix), dtype=float).reshape(P, m) * dt
    s = _sigma_matrix(sigma_f, t, m, dM.shape[1])
    step = step + (dM[:, :m] if s is None else dM @ s.T)
    return step


def sde_lipschitz_map(b_f: Callable | None, sigma_f: Callable | None, driver: PathBundle, x0) -> PathBundle:
    """Euler solution of ``dPhi = b_f(t, Phi_[0,t], M_[0,t]) dt + sigma_f(t) dM``.

    ``b_f(t, phi_prefix, m_prefix)`` returns ``(P, m)``; ``sigma_f(t)`` returns
    a scalar or an ``(m, n)`` matrix. ``None`` means zero drift or identity
    volatility.
    """
    grid = driver.grid
    x0 = np.atleast_1d(np.asarray(x0, dtype=float))
    P, m = driver.n_paths, x0.size
    dM = driver.increments()
    X = np.empty((P, grid.M + 1, m))
    X[:, 0] = x0
    for i in range(grid.M):
        nxt = X[:, i] + _euler_increment(b_f, sigma_f, grid.t(i), grid.delta, X[:, : i + 1],
                                         _driver_prefix(driver.values, i), dM[:, i])
        bad = ~np.isfinite(nxt)
        if bad.any():
            raise BlowupError("non-finite Euler update", int(np.argwhere(bad.any(axis=1))[0, 0]), i)
        X[:, i + 1] = nxt
    return PathBundle(grid, X, driver.seed, "forward-state")


def sde_map_constant(C_f: float, T: float) -> float:
    """``L = C_f (1 + T) e^{C_f T}`` for the map from driver to solution."""
    return C_f * (1.0 + T) * math.exp(C_f * T)


def reflected_composition_constant(C_f: float, T: float, L_gamma: float) -> float:
    """Driver-to-solution constant of the reflected equation.

    With ``Phi = Gamma(eta)`` and the drift reading ``Phi``, Gronwall on
    ``eta`` gives ``L_gamma C_f (1 + T) e^{C_f L_gamma T}``.
    """
    return L_gamma * C_f * (1.0 + T) * math.exp(C_f * L_gamma * T)


def reflected_sde(b_f: Callable | None, sigma_f: Callable | None, spec: ReflectionSpec,
                  driver: PathBundle | BrownianSource, x0, record_stride: int = 1,
                  cap: int = PROJECTION_CAP, markovian: bool = False):
    """Euler step then polyhedral projection; returns ``(ReflectedPath, l)``.

    ``driver`` may be a ``BrownianSource`` for long horizons; increments are
    then generated one step at a time and only every ``record_stride``-th
    node is kept, so ``b_f`` must read only the last node of its prefixes
    (pass ``markovian=True``). With ``G = R^n`` the states equal
    ``sde_lipschitz_map`` bit for bit.
    """
    x0 = np.atleast_1d(np.asarray(x0, dtype=float))
    if x0.size != spec.dim:
        raise ReflectionError("initial point dimension does not match the domain")
    if not spec.contains(x0[None])[0]:
        raise ReflectionError("initial point is outside the domain")
    if not spec.valid:
        raise ReflectionError("reflection conditions (i)-(iii) are not all satisfied:\n" + spec.report())
    streaming = isinstance(driver, BrownianSource)
    if streaming and not markovian:
        raise PreconditionError("streaming drivers need a drift that reads only the current node (markovian=True)")
    if record_stride < 1 or driver.grid.M % record_stride:
        raise PreconditionError("record_stride must divide the number of steps")
    grid = driver.grid
    P, m = driver.n_paths, x0.size
    n_rec = grid.M // record_stride + 1
    X = np.empty((P, n_rec if streaming else grid.M + 1, m))
    psi = np.zeros_like(X)
    dl = np.zeros((P, X.shape[1] - 1))
    X[:, 0] = x0
    cur = np.broadcast_to(x0, (P, m)).copy()
    cum_psi = np.zeros((P, m))
    dM = None if streaming else driver.increments()
    m_cur = np.zeros((P, 1, driver.dim))
    tv = np.zeros(P)
    for i in range(grid.M):
        if streaming:
            inc = driver.increment(i)
            phi_prefix = cur[:, None]
            m_prefix = m_cur
        else:
            inc = dM[:, i]
            phi_prefix = X[:, : i + 1]
            m_prefix = _driver_prefix(driver.values, i)
        y = cur + _euler_increment(b_f, sigma_f, grid.t(i), grid.delta, phi_prefix, m_prefix, inc)
        bad = ~np.isfinite(y)
        if bad.any():
            raise BlowupError("non-finite Euler update", int(np.argwhere(bad.any(axis=1))[0, 0]), i)
        nxt, _ = _push(spec, y, i + 1, cap)
        if spec.n_faces:
            d = nxt - y
            cum_psi = cum_psi + d
            tv = tv + np.linalg.norm(d, axis=1)
        cur = nxt
        if streaming:
            m_cur = m_cur + inc[:, None]
            if (i + 1) % record_stride == 0:
                r = (i + 1) // record_stride
                X[:, r], psi[:, r] = cur, cum_psi
                dl[:, r - 1] = tv
                tv = np.zeros(P)
        else:
            X[:, i + 1], psi[:, i + 1] = cur, cum_psi
            dl[:, i] = tv
            tv = np.zeros(P)
    out = ReflectedPath(X, psi, dl)
    return out, out.l


def _sup_norm(x: np.ndarray) -> np.ndarray:
    if x.ndim == 2:
        return np.max(np.abs(x), axis=1)
    return np.max(np.linalg.norm(x, axis=2), axis=1)


def lipschitz_ratio(out_a, out_b, in_a, in_b) -> float:
    """``max`` over paired rows of ``sup_t |out_a - out_b| / sup_t |in_a - in_b|``."""
    num = _sup_norm(np.asarray(out_a) - np.asarray(out_b))
    den = _sup_norm(np.asarray(in_a) - np.asarray(in_b))
    keep = den > 0
    if not keep.any():
        return 0.0
    return float(np.max(num[keep] / den[keep]))


def measure_skorokhod_constant(spec: ReflectionSpec, bundle: PathBundle, x0) -> float:
    """Empirical Lipschitz constant of the Skorokhod map on paired paths of one bundle.

    Row ``p`` of the first half is paired with row ``p`` of the second half;
    both inputs start at ``x0``.
    """
    half = bundle.n_paths // 2
    if half < 1:
        raise PreconditionError("need at least two paths")
    base = bundle.values - bundle.values[:, :1] + np.atleast_1d(np.asarray(x0, dtype=float))
    out = skorokhod_polyhedral(base[: 2 * half], spec)
    return lipschitz_ratio(out.values[:half], out.values[half: 2 * half], base[:half], base[half: 2 * half])
