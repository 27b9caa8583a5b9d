"""Hot inner loops for kernel-denoiser construction.

Each kernel exists twice: a numba ``@njit`` version and a pure-numpy
fallback, selected at call time via ``backend.use_numba()`` (env var
``PNP_BACKEND``).  Both are deterministic run-to-run; the two backends
may differ in the last float bits because summation order differs.

``benchmarks/bench_kernels.py`` times the two paths against each other.
"""

from __future__ import annotations

import numpy as np

from . import backend

try:
    from numba import njit, prange

    _HAVE_NUMBA = True
except ImportError:  # pragma: no cover
    _HAVE_NUMBA = False


# ---------------------------------------------------------------------------
# full (all-pairs) Gaussian patch kernel: K[i, j] = exp(-||p_i - p_j||^2 / h^2)
# ---------------------------------------------------------------------------

def _full_kernel_numpy(patches: np.ndarray, inv_h2: float) -> np.ndarray:
    n = patches.shape[0]
    K = np.empty((n, n))
    for i in range(n):
        d2 = np.sum((patches - patches[i]) ** 2, axis=1)
        K[i] = np.exp(-d2 * inv_h2)
    # exact symmetry and unit diagonal regardless of rounding
    K = 0.5 * (K + K.T)
    np.fill_diagonal(K, 1.0)
    return K


if _HAVE_NUMBA:

    @njit(cache=True, parallel=True)
    def _full_kernel_numba(patches, inv_h2):  # pragma: no cover - compiled
        n, p = patches.shape
        K = np.empty((n, n))
        for i in prange(n):
            K[i, i] = 1.0
            for j in range(i + 1, n):
                d2 = 0.0
                for k in range(p):
                    diff = patches[i, k] - patches[j, k]
                    d2 += diff * diff
                K[i, j] = np.exp(-d2 * inv_h2)
        for i in prange(n):
            for j in range(i):
                K[i, j] = K[j, i]
        return K


def full_kernel(patches: np.ndarray, inv_h2: float) -> np.ndarray:
    patches = np.ascontiguousarray(patches, dtype=np.float64)
    if backend.use_numba():
        return _full_kernel_numba(patches, float(inv_h2))
    return _full_kernel_numpy(patches, float(inv_h2))


# ---------------------------------------------------------------------------
# windowed kernel: weights only for neighbors within a square search window
# (circular wrap keeps the neighbor relation symmetric)
# ---------------------------------------------------------------------------

def window_offsets(radius: int) -> np.ndarray:
    offs = [(dy, dx) for dy in range(-radius, radius + 1) for dx in range(-radius, radius + 1)]
    return np.array(offs, dtype=np.int64)


def neighbor_indices(height: int, width: int, radius: int) -> np.ndarray:
    """(n, (2r+1)^2) flat indices of each pixel's wrapped search window."""
    yy, xx = np.meshgrid(np.arange(height), np.arange(width), indexing="ij")
    offs = window_offsets(radius)
    ny = (yy.ravel()[:, None] + offs[:, 0]) % height
    nx = (xx.ravel()[:, None] + offs[:, 1]) % width
    return ny * width + nx


def _windowed_weights_numpy(patches, nbr, inv_h2):
    # loop over window slots to avoid an (n, window, patch) temporary
    n, w = nbr.shape
    out = np.empty((n, w))
    for t in range(w):
        d2 = np.sum((patches - patches[nbr[:, t]]) ** 2, axis=1)
        out[:, t] = np.exp(-d2 * inv_h2)
    return out


if _HAVE_NUMBA:

    @njit(cache=True, parallel=True)
    def _windowed_weights_numba(patches, nbr, inv_h2):  # pragma: no cover - compiled
        n, w = nbr.shape
        p = patches.shape[1]
        out = np.empty((n, w))
        for i in prange(n):
            for t in range(w):
                j = nbr[i, t]
                d2 = 0.0
                for k in range(p):
                    diff = patches[i, k] - patches[j, k]
                    d2 += diff * diff
                out[i, t] = np.exp(-d2 * inv_h2)
        return out


def windowed_weights(patches: np.ndarray, nbr: np.ndarray, inv_h2: float) -> np.ndarray:
    patches = np.ascontiguousarray(patches, dtype=np.float64)
    nbr = np.ascontiguousarray(nbr, dtype=np.int64)
    if backend.use_numba():
        return _windowed_weights_numba(patches, nbr, float(inv_h2))
    return _windowed_weights_numpy(patches, nbr, float(inv_h2))


def _gather_matvec_numpy(weights, nbr, x):
    return np.sum(weights * x[nbr], axis=1)


if _HAVE_NUMBA:

    @njit(cache=True, parallel=True)
    def _gather_matvec_numba(weights, nbr, x):  # pragma: no cover - compiled
        n, w = nbr.shape
        out = np.empty(n)
        for i in prange(n):
            acc = 0.0
            for t in range(w):
                acc += weights[i, t] * x[nbr[i, t]]
            out[i] = acc
        return out


def gather_matvec(weights: np.ndarray, nbr: np.ndarray, x: np.ndarray) -> np.ndarray:
    """y = K x for the windowed kernel stored as (weights, neighbor indices)."""
    if backend.use_numba():
        return _gather_matvec_numba(weights, nbr, np.ascontiguousarray(x, dtype=np.float64))
    return _gather_matvec_numpy(weights, nbr, x)
