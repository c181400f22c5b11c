"""Counter-based Gaussian streams and order-fixed reductions.

Every normal variate is a pure function of ``(seed, stream, step, coord, path)``.
The value for one path at one step is the ``path``-th 64-bit word of a Philox
stream whose key is ``(seed, stream)`` and whose counter words are
``(block, step, coord, 0)``. Any chunk of paths can therefore be generated on
its own and the result never depends on how the work was split.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor

import numpy as np
from numpy.random import Philox
from scipy.special import ndtri

__all__ = [
    "CHUNK",
    "normals",
    "uniforms",
    "chunked_sum",
    "chunked_mean",
    "chunked_gram",
]

CHUNK = 16384
_MASK64 = (1 << 64) - 1


def _raw_words(seed: int, stream: int, step: int, coord: int, start: int, stop: int) -> np.ndarray:
    first_block = start // 4
    last_block = (stop + 3) // 4
    key = np.array([seed & _MASK64, stream & _MASK64], dtype=np.uint64)
    counter = np.array([first_block, step, coord, 0], dtype=np.uint64)
    words = Philox(key=key, counter=counter).random_raw(4 * (last_block - first_block))
    offset = start - 4 * first_block
    return words[offset: offset + (stop - start)]


def _to_unit(words: np.ndarray) -> np.ndarray:
    # 53 high bits, shifted by half an ulp so 0 and 1 are never produced
    return ((words >> np.uint64(11)).astype(np.float64) + 0.5) * 2.0**-53


def uniforms(seed: int, stream: int, step: int, coord: int, start: int, stop: int) -> np.ndarray:
    """Uniforms on (0, 1) for paths ``start..stop-1`` at one (step, coord)."""
    return _to_unit(_raw_words(seed, stream, step, coord, start, stop))


def normals(
    seed: int,
    stream: int,
    step: int,
    n_paths: int,
    dim: int,
    workers: int = 1,
) -> np.ndarray:
    """Standard normals of shape ``(n_paths, dim)`` for one step.

    ``workers`` only changes how the path range is split; the output is
    bitwise identical for any value.
    """
    out = np.empty((n_paths, dim))
    bounds = [(a, min(a + CHUNK, n_paths)) for a in range(0, n_paths, CHUNK)]

    def fill(span):
        a, b = span
        for k in range(dim):
            out[a:b, k] = ndtri(uniforms(seed, stream, step, k, a, b))

    if workers > 1 and len(bounds) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            list(pool.map(fill, bounds))
    else:
        for span in bounds:
            fill(span)
    return out


def chunked_sum(x: np.ndarray, axis: int = 0) -> np.ndarray:
    """Sum over the path axis in a fixed chunk order."""
    x = np.moveaxis(np.asarray(x), axis, 0)
    total = np.zeros(x.shape[1:], dtype=np.result_type(x.dtype, np.float64))
    for a in range(0, x.shape[0], CHUNK):
        total = total + x[a: a + CHUNK].sum(axis=0)
    return total


def chunked_mean(x: np.ndarray, axis: int = 0) -> np.ndarray:
    x = np.asarray(x)
    return chunked_sum(x, axis) / x.shape[axis]


def chunked_gram(a: np.ndarray, b: np.ndarray | None = None) -> np.ndarray:
    """``a.T @ b`` accumulated over fixed row chunks."""
    b = a if b is None else b
    out = np.zeros((a.shape[1], b.shape[1]))
    for s in range(0, a.shape[0], CHUNK):
        out += a[s: s + CHUNK].T @ b[s: s + CHUNK]
    return out
