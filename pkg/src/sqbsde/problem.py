"""Problem declaration and the sampling audit of its declared constants.

Coefficients are batched callables. With ``P`` paths, a path prefix has shape
``(P, i+1, m)``, ``y`` has shape ``(P, d)`` and ``z`` has shape ``(P, d, n)``:

* ``xi(path) -> (P, d)``
* ``f(t, path, y, z) -> (P, d)``
* ``g(t, path, y, z) -> (P, n)``
* ``sigma(t, path) -> (P, m, n)``; ``None`` stands for the identity.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import rng
from .errors import AuditError
from .paths import STREAM_PROBE

__all__ = ["ProblemSpec", "AuditItem", "AuditReport", "audit_assumptions"]

AUDIT_SLACK = 0.01
AUDIT_STEPS = 16


@dataclass(frozen=True)
class ProblemSpec:
    """A BSDE or FBSDE problem with the constants it claims to satisfy."""

    name: str
    d: int
    n: int
    m: int
    xi: Callable
    f: Callable | None = None
    g: Callable | None = None
    sigma: Callable | None = None
    T: float = 1.0
    K: float = 0.0
    C: float = 1.0
    C_g: float | None = 0.0
    C_bar: float | None = None
    M_ell: float = 1.0
    a: np.ndarray | None = None
    l: Callable | None = None
    markovian: bool = True
    xi_bounded: bool = True
    f_reads_z: bool = True
    g_vanishes: bool = False
    reference: str | None = None
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if min(self.d, self.n, self.m) < 1:
            raise ValueError("dimensions must be positive")
        if self.a is not None:
            a = np.atleast_1d(np.asarray(self.a, dtype=float))
            if a.shape != (self.d,):
                raise ValueError("a must have one weight per backward coordinate")
            if np.any(a == 0):
                raise ValueError("every quadratic weight a^i must be nonzero")
            object.__setattr__(self, "a", a)

    @property
    def identity_sigma(self) -> bool:
        return self.sigma is None

    def eval_xi(self, path: np.ndarray) -> np.ndarray:
        return np.asarray(self.xi(path), dtype=float).reshape(path.shape[0], self.d)

    def eval_f(self, t, path, y, z) -> np.ndarray:
        if self.f is None:
            return np.zeros((path.shape[0], self.d))
        return np.asarray(self.f(t, path, y, z), dtype=float).reshape(path.shape[0], self.d)

    def eval_g(self, t, path, y, z) -> np.ndarray:
        if self.g is None:
            return np.zeros((path.shape[0], self.n))
        return np.asarray(self.g(t, path, y, z), dtype=float).reshape(path.shape[0], self.n)

    def eval_sigma(self, t, path) -> np.ndarray:
        P = path.shape[0]
        if self.sigma is None:
            return np.broadcast_to(np.eye(self.m, self.n), (P, self.m, self.n))
        return np.asarray(self.sigma(t, path), dtype=float).reshape(P, self.m, self.n)

    def driver(self, t, path, y, z) -> np.ndarray:
        """Total driver ``f + z g`` (without any quadratic diagonal term)."""
        return self.eval_f(t, path, y, z) + np.einsum("pdn,pn->pd", z, self.eval_g(t, path, y, z))

    def diagonal_driver(self, t, path, y, z) -> np.ndarray:
        """``f + z g + a^i |z^i|^2`` row by row."""
        out = self.driver(t, path, y, z)
        if self.a is not None:
            out = out + self.a[None, :] * np.sum(z**2, axis=2)
        return out

    def with_horizon(self, T: float) -> "ProblemSpec":
        from dataclasses import replace

        return replace(self, T=float(T))


@dataclass(frozen=True)
class AuditItem:
    name: str
    declared: float
    observed: float
    passed: bool


@dataclass
class AuditReport:
    spec_name: str
    budget: int
    items: list

    @property
    def passed(self) -> bool:
        return all(item.passed for item in self.items)

    def item(self, name: str) -> AuditItem:
        for it in self.items:
            if it.name == name:
                return it
        raise KeyError(name)

    def text(self) -> str:
        lines = [f"assumption audit for {self.spec_name} (budget {self.budget})"]
        for it in self.items:
            flag = "pass" if it.passed else "FAIL"
            lines.append(f"  {it.name:<28s} declared={it.declared:.6g} observed={it.observed:.6g} {flag}")
        return "\n".join(lines)


class _Probes:
    """Random probe paths and arguments, a pure function of ``(seed, probe index)``."""

    def __init__(self, spec: ProblemSpec, budget: int, seed: int):
        self.spec = spec
        self.budget = budget
        self.seed = seed
        self.M = AUDIT_STEPS
        self.dt = spec.T / self.M
        self._var = 0

    def normal(self, dim: int) -> np.ndarray:
        out = rng.normals(self.seed, STREAM_PROBE, self._var, self.budget, dim)
        self._var += 1
        return out

    def uniform(self) -> np.ndarray:
        out = rng.uniforms(self.seed, STREAM_PROBE, self._var, 0, 0, self.budget)
        self._var += 1
        return out

    def paths(self) -> np.ndarray:
        m = self.spec.m
        inc = self.normal(m * self.M).reshape(self.budget, self.M, m) * np.sqrt(self.dt)
        scale = 0.5 + 1.5 * self.uniform()
        start = self.normal(m)
        out = np.concatenate([np.zeros((self.budget, 1, m)), np.cumsum(inc, axis=1)], axis=1)
        return start[:, None, :] + scale[:, None, None] * out

    def partner(self, x: np.ndarray) -> np.ndarray:
        """Half the partners are independent paths, half differ at one node."""
        other = self.paths()
        bump_node = np.minimum((self.uniform() * (self.M + 1)).astype(int), self.M)
        bump = self.normal(self.spec.m) * 10.0 ** (-3.0 * self.uniform())[:, None]
        bumped = x.copy()
        idx = np.arange(self.budget)
        bumped[idx, bump_node] += bump
        use_bump = (idx % 2) == 1
        return np.where(use_bump[:, None, None], bumped, other)

    def nodes(self) -> np.ndarray:
        return np.minimum((self.uniform() * (self.M + 1)).astype(int), self.M)


def _sup_dist2(x, xp, upto=None):
    diff = x - xp if upto is None else (x - xp)[:, : upto + 1]
    return np.max(np.sum(diff**2, axis=2), axis=1)


def _ratio(num, den):
    num = np.asarray(num, dtype=float)
    den = np.asarray(den, dtype=float)
    ok = den > 1e-300
    if not ok.any():
        return 0.0
    return float(np.max(num[ok] / den[ok]))


def _check(name, declared, observed):
    passed = observed <= declared * (1.0 + AUDIT_SLACK) + 1e-12
    return AuditItem(name, float(declared), float(observed), bool(passed))


def _grouped(fn, nodes, *arrays):
    """Evaluate ``fn(t, node, *slices)`` group by group on identical time nodes."""
    out = None
    for node in np.unique(nodes):
        sel = np.nonzero(nodes == node)[0]
        res = np.asarray(fn(int(node), *[a[sel] for a in arrays]), dtype=float)
        if out is None:
            out = np.zeros((len(nodes),) + res.shape[1:])
        out[sel] = res
    return out


def audit_assumptions(spec: ProblemSpec, probe_budget: int = 1000, seed: int = 0) -> AuditReport:
    """Largest observed difference quotient per assumption against the declared constant."""
    if probe_budget < 100:
        raise ValueError("probe_budget must be at least 100")
    pr = _Probes(spec, probe_budget, seed)
    d, n, m = spec.d, spec.n, spec.m
    x = pr.paths()
    xp = pr.partner(x)
    nodes = pr.nodes()
    y_scale = 2.0 * max(1.0, np.sqrt(spec.C))
    y = pr.normal(d) * y_scale
    yp = np.where(((np.arange(probe_budget) % 2) == 1)[:, None], y, pr.normal(d) * y_scale)
    z = pr.normal(d * n).reshape(-1, d, n) * 2.0
    zp = z + pr.normal(d * n).reshape(-1, d, n) * 10.0 ** (-2.0 * pr.uniform())[:, None, None]
    zeros_y = np.zeros_like(y)
    zeros_z = np.zeros_like(z)
    items = []

    def guarded(name, thunk):
        try:
            return thunk()
        except AuditError:
            raise
        except Exception as exc:  # noqa: BLE001 - any coefficient failure is reported by name
            raise AuditError(f"{name}: coefficient evaluation failed: {exc}") from exc

    def tgrid(node):
        return node * pr.dt

    xi_x = guarded("terminal", lambda: spec.eval_xi(x))
    xi_xp = guarded("terminal", lambda: spec.eval_xi(xp))
    if spec.xi_bounded:
        items.append(_check("terminal bound", spec.C, np.max(np.sum(xi_x**2, axis=1))))
    items.append(
        _check("terminal Lipschitz", spec.K, _ratio(np.sum((xi_x - xi_xp) ** 2, axis=1), _sup_dist2(x, xp)))
    )

    def f_at(node, xs, ys, zs):
        return spec.eval_f(tgrid(node), xs[:, : node + 1], ys, zs)

    def g_at(node, xs, ys, zs):
        return spec.eval_g(tgrid(node), xs[:, : node + 1], ys, zs)

    running = np.maximum.accumulate(np.sum((x - xp) ** 2, axis=2), axis=1)
    sup_upto = running[np.arange(probe_budget), nodes]
    arg_dist = sup_upto + np.sum((y - yp) ** 2, axis=1) + np.sum((z - zp) ** 2, axis=(1, 2))

    f0 = guarded("driver f", lambda: _grouped(f_at, nodes, x, zeros_y, zeros_z))
    f1 = guarded("driver f", lambda: _grouped(f_at, nodes, x, y, z))
    f2 = guarded("driver f", lambda: _grouped(f_at, nodes, xp, yp, zp))
    items.append(_check("driver f bound at zero", spec.C, np.max(np.sum(f0**2, axis=1))))
    items.append(_check("driver f Lipschitz", spec.C, _ratio(np.sum((f1 - f2) ** 2, axis=1), arg_dist)))

    g0 = guarded("drift g", lambda: _grouped(g_at, nodes, x, zeros_y, zeros_z))
    g1 = guarded("drift g", lambda: _grouped(g_at, nodes, x, y, z))
    g2 = guarded("drift g", lambda: _grouped(g_at, nodes, xp, yp, zp))
    items.append(_check("drift g bound at zero", spec.C, np.max(np.sum(g0**2, axis=1))))
    dg2 = np.sum((g1 - g2) ** 2, axis=1)
    if spec.C_g is not None:
        items.append(_check("drift g Lipschitz", spec.C_g, _ratio(dg2, arg_dist)))
    if spec.l is not None:
        zn = np.sqrt(np.sum(z**2, axis=(1, 2))) + np.sqrt(np.sum(zp**2, axis=(1, 2)))
        growth = np.array([float(spec.l(r)) for r in zn])
        items.append(_check("drift g local growth", 1.0, _ratio(dg2, growth * arg_dist)))

    if spec.sigma is not None:
        def s_at(node, xs):
            return spec.eval_sigma(tgrid(node), xs[:, : node + 1])

        s1 = guarded("volatility", lambda: _grouped(s_at, nodes, x))
        s2 = guarded("volatility", lambda: _grouped(s_at, nodes, xp))
        items.append(_check("volatility Lipschitz", spec.C, _ratio(np.sum((s1 - s2) ** 2, axis=(1, 2)), sup_upto)))
        eig = np.linalg.eigvalsh(np.einsum("pij,pkj->pik", s1, s1))
        worst = max(float(np.max(eig)), 1.0 / max(float(np.min(eig)), 1e-300))
        items.append(_check("volatility ellipticity", spec.M_ell, worst))

    if spec.a is not None:
        items.append(_check("diagonal terminal |xi^i| <= C", spec.C, float(np.max(np.abs(xi_x)))))
        bound = spec.C_bar if spec.C_bar is not None else 0.0
        items.append(_check("diagonal f bound", bound, float(np.max(np.abs(f1)))))
    return AuditReport(spec.name, probe_budget, items)
