"""Time grids, path ensembles, path splicing and the Euler scheme."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import rng
from .errors import BlowupError, SpliceError

__all__ = [
    "TimeGrid",
    "PathBundle",
    "PathPrefix",
    "BrownianSource",
    "concat_paths",
    "simulate_brownian",
    "euler_forward",
]

# stream identifiers keep unrelated random draws apart under one seed
STREAM_BROWNIAN = 0
STREAM_PROBE = 1
STREAM_PREFIX = 2
STREAM_PAIRS = 3


@dataclass(frozen=True)
class TimeGrid:
    """Uniform grid ``t_i = i * T / M`` on ``[0, T]``."""

    T: float
    M: int

    def __post_init__(self):
        if not (self.T > 0):
            raise ValueError("horizon must be positive")
        if self.M < 1:
            raise ValueError("grid needs at least one step")

    @property
    def delta(self) -> float:
        return self.T / self.M

    @property
    def points(self) -> np.ndarray:
        t = np.arange(self.M + 1) * self.delta
        t[-1] = self.T
        return t

    def t(self, i: int) -> float:
        return self.T if i == self.M else i * self.delta

    def index_of(self, time: float) -> int:
        i = int(round(time / self.delta))
        if abs(i * self.delta - time) > 1e-9 * max(1.0, self.T):
            raise ValueError(f"time {time} is not a grid node")
        return i

    def scaled(self, lam: float) -> "TimeGrid":
        return TimeGrid(self.T * lam, self.M)


@dataclass
class PathBundle:
    """Ensemble of discretized paths, ``values`` has shape ``(n_paths, M+1, dim)``."""

    grid: TimeGrid
    values: np.ndarray
    seed: int | None = None
    kind: str = "generic"

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.ndim != 3 or v.shape[1] != self.grid.M + 1:
            raise ValueError(f"values must have shape (n_paths, {self.grid.M + 1}, dim), got {v.shape}")
        self.values = v
        if self.kind not in ("brownian", "forward-state", "generic"):
            raise ValueError(f"unknown bundle kind {self.kind!r}")

    @property
    def n_paths(self) -> int:
        return self.values.shape[0]

    @property
    def dim(self) -> int:
        return self.values.shape[2]

    @property
    def initial_point(self) -> np.ndarray:
        return self.values[0, 0]

    def increments(self) -> np.ndarray:
        return np.diff(self.values, axis=1)

    def subset(self, n_paths: int) -> "PathBundle":
        return PathBundle(self.grid, self.values[:n_paths], self.seed, self.kind)


@dataclass(frozen=True)
class PathPrefix:
    """Stopped path ``x_[0,u]`` on grid nodes ``0..u_idx``.

    ``values`` is ``(u_idx+1, dim)`` for one prefix shared by every path, or
    ``(n_paths, u_idx+1, dim)`` for one prefix per path. Longer arrays are cut
    at ``u_idx`` so nothing after the stopping node can leak in.
    """

    u_idx: int
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.ndim == 1:
            v = v[:, None]
        if v.shape[-2] < self.u_idx + 1:
            raise ValueError("prefix shorter than u_idx + 1 nodes")
        v = v[..., : self.u_idx + 1, :].copy()
        object.__setattr__(self, "values", v)

    @property
    def terminal(self) -> np.ndarray:
        return self.values[..., -1, :]

    @property
    def shared(self) -> bool:
        return self.values.ndim == 2

    def broadcast(self, n_paths: int) -> np.ndarray:
        if self.shared:
            return np.broadcast_to(self.values, (n_paths,) + self.values.shape)
        if self.values.shape[0] != n_paths:
            raise ValueError("per-path prefix count does not match the bundle")
        return self.values


def concat_paths(prefix: PathPrefix, tail: np.ndarray, n_points: int | None = None) -> np.ndarray:
    """Splice ``prefix`` on ``[0, u]`` with ``tail`` on ``[u, v]``.

    ``tail`` holds values on nodes ``u_idx..v_idx`` (first node is the splice
    node). The result is constant at the tail's last value on nodes after
    ``v_idx`` up to ``n_points - 1``.
    """
    tail = np.asarray(tail, dtype=float)
    if tail.ndim == 1:
        tail = tail[:, None]
    pre = prefix.values
    if pre.ndim == 2 and tail.ndim == 3:
        pre = np.broadcast_to(pre, (tail.shape[0],) + pre.shape)
    if tail.ndim == 2 and pre.ndim == 3:
        tail = np.broadcast_to(tail, (pre.shape[0],) + tail.shape)
    if not np.array_equal(pre[..., -1, :], tail[..., 0, :]):
        raise SpliceError(f"prefix and tail disagree at splice node {prefix.u_idx}")
    v_idx = prefix.u_idx + tail.shape[-2] - 1
    total = v_idx + 1 if n_points is None else n_points
    if total < v_idx + 1:
        raise ValueError("n_points shorter than the spliced path")
    out = np.empty(pre.shape[:-2] + (total, pre.shape[-1]))
    out[..., : prefix.u_idx + 1, :] = pre
    out[..., prefix.u_idx: v_idx + 1, :] = tail
    out[..., v_idx + 1:, :] = tail[..., -1:, :]
    return out


@dataclass(frozen=True)
class BrownianSource:
    """Lazy Brownian increments, identical to ``simulate_brownian`` output.

    Useful when the full ``(n_paths, M+1, dim)`` array would not fit in memory.
    """

    grid: TimeGrid
    n_paths: int
    dim: int
    seed: int
    workers: int = 1
    stream: int = STREAM_BROWNIAN

    def increment(self, i: int) -> np.ndarray:
        z = rng.normals(self.seed, self.stream, i, self.n_paths, self.dim, self.workers)
        return np.sqrt(self.grid.delta) * z

    def bundle(self, x0=0.0) -> PathBundle:
        return simulate_brownian(self.grid, self.n_paths, self.dim, self.seed, x0, self.workers, self.stream)


def simulate_brownian(
    grid: TimeGrid,
    n_paths: int,
    dim: int,
    seed: int,
    x0=0.0,
    workers: int = 1,
    stream: int = STREAM_BROWNIAN,
) -> PathBundle:
    """Brownian paths started at ``x0``; a pure function of ``(seed, path, step)``."""
    if n_paths < 1:
        raise ValueError("n_paths must be at least 1")
    sd = np.sqrt(grid.delta)
    values = np.empty((n_paths, grid.M + 1, dim))
    values[:, 0, :] = np.broadcast_to(np.asarray(x0, dtype=float), (dim,))
    for i in range(grid.M):
        values[:, i + 1] = values[:, i] + sd * rng.normals(seed, stream, i, n_paths, dim, workers)
    return PathBundle(grid, values, seed, "brownian")


def _apply_vol(vol_value, dw: np.ndarray) -> np.ndarray:
    if vol_value is None:
        return dw
    s = np.asarray(vol_value, dtype=float)
    if s.ndim == 0:
        return s * dw
    if s.ndim == 2:
        return dw @ s.T
    return np.einsum("pmn,pn->pm", s, dw)


def euler_forward(
    drift: Callable | None,
    vol: Callable | None,
    driver_bundle: PathBundle,
    x0,
    state_dim: int | None = None,
) -> PathBundle:
    """Euler scheme ``X_{i+1} = X_i + drift(t_i, X_[0,i]) dt + vol(t_i, X_[0,i]) dW_i``.

    ``drift(t, prefix)`` returns ``(P, m)``; ``vol(t, prefix)`` returns a scalar,
    an ``(m, n)`` matrix or a per-path ``(P, m, n)`` array. ``None`` means zero
    drift or identity volatility.
    """
    grid = driver_bundle.grid
    dw = driver_bundle.increments()
    P = driver_bundle.n_paths
    m = state_dim if state_dim is not None else np.size(x0) if np.ndim(x0) else driver_bundle.dim
    X = np.empty((P, grid.M + 1, m))
    X[:, 0] = np.broadcast_to(np.asarray(x0, dtype=float), (m,))
    dt = grid.delta
    for i in range(grid.M):
        t = grid.t(i)
        prefix = X[:, : i + 1]
        step = X[:, i].copy()
        if drift is not None:
            step += np.asarray(drift(t, prefix), dtype=float).reshape(P, m) * dt
        step += _apply_vol(vol(t, prefix) if vol is not None else None, dw[:, i]).reshape(P, m)
        bad = ~np.isfinite(step)
        if bad.any():
            p = int(np.argwhere(bad.any(axis=1))[0, 0])
            raise BlowupError("non-finite Euler update", p, i)
        X[:, i + 1] = step
    return PathBundle(grid, X, driver_bundle.seed, "forward-state")
