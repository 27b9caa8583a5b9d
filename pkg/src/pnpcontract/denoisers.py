"""Linear denoisers: the row-normalized patch kernel and its symmetrized,
doubly-stochastic variant.

The kernel matrix is a Gaussian on squared Euclidean patch distances of a
fixed guide image, so K is nonnegative, symmetric, has unit diagonal, and
is positive semidefinite in exact arithmetic.  The denoiser is built once
from the guide and held fixed across PnP iterations, which keeps the
overall update an affine map.

Two application forms:

* ``row_normalized``: W = D^-1 K with D = diag(Ke); row-stochastic,
  generally nonsymmetric.  Its natural contraction norm is the D-weighted
  norm, and D^(1/2) W D^(-1/2) = D^(-1/2) K D^(-1/2) is symmetric PSD.
* ``symmetric_ds``: W = Lam K Lam for a positive diagonal Lam found by a
  damped symmetric Sinkhorn iteration; symmetric, doubly stochastic, and
  PSD by congruence with K.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import _kernels
from .backend import check_dense
from .errors import ConfigError, NumericalError
from .linops import LinOp, eig_sym

ROW_NORMALIZED = "row_normalized"
SYMMETRIC_DS = "symmetric_ds"

SINKHORN_TOL = 1e-12
SINKHORN_MAX_ITER = 10000
# Gaussian bandwidth as a multiple of the RMS patch spread.  Large multiples
# drive the kernel toward the numerically singular all-ones matrix; 0.75
# keeps the kernel certifiably nonsingular (min eig >> 1e-9) at desk scale
# while the eigenvalue-1 gap stays macroscopic.
DEFAULT_BANDWIDTH_SCALE = 0.75


def patch_matrix(guide: np.ndarray, radius: int) -> np.ndarray:
    """(n, (2r+1)^2) matrix of wrapped patches of the guide image."""
    guide = np.asarray(guide, dtype=float)
    if guide.ndim != 2:
        raise ConfigError("guide must be a 2-D image")
    if not np.all(np.isfinite(guide)):
        raise ConfigError("guide image has non-finite values")
    cols = [
        np.roll(np.roll(guide, -dy, axis=0), -dx, axis=1).ravel()
        for dy in range(-radius, radius + 1)
        for dx in range(-radius, radius + 1)
    ]
    return np.stack(cols, axis=1)


def patch_spread(patches: np.ndarray) -> float:
    """RMS distance of patches from the mean patch (sigma_patch)."""
    centered = patches - patches.mean(axis=0)
    return float(np.sqrt(np.mean(np.sum(centered**2, axis=1))))


@dataclass
class KernelParams:
    guide: np.ndarray
    patch_radius: int = 1
    search_radius: Optional[int] = None  # None = FULL search
    bandwidth: Optional[float] = None  # None = bandwidth_scale * sigma_patch
    bandwidth_scale: float = DEFAULT_BANDWIDTH_SCALE

    def resolve_bandwidth(self, patches: np.ndarray) -> float:
        if self.bandwidth is not None:
            if self.bandwidth <= 0:
                raise ConfigError("bandwidth must be positive")
            return float(self.bandwidth)
        sigma = patch_spread(patches)
        if sigma == 0.0:
            return 1.0  # constant guide: all distances are zero anyway
        return self.bandwidth_scale * sigma


class KernelDenoiser:
    """Kernel matrix plus the chosen normalization, dense or windowed."""

    def __init__(self, shape, kind, K=None, weights=None, nbr=None, lam=None):
        self.shape = tuple(shape)
        self.n = self.shape[0] * self.shape[1]
        if kind not in (ROW_NORMALIZED, SYMMETRIC_DS):
            raise ConfigError(f"unknown denoiser kind {kind!r}")
        self.kind = kind
        self.K = K
        self.weights = weights
        self.nbr = nbr
        self.lam = lam
        if (K is None) == (weights is None):
            raise ConfigError("exactly one of dense K / windowed weights expected")
        if kind == SYMMETRIC_DS and lam is None:
            raise ConfigError("symmetric_ds denoiser needs its scaling vector")
        self.degrees = self._kernel_matvec(np.ones(self.n))
        if np.any(self.degrees <= 0):
            raise ConfigError("kernel has a nonpositive row sum")

    # -- kernel plumbing ----------------------------------------------------

    @property
    def dense_storage(self) -> bool:
        return self.K is not None

    def _kernel_matvec(self, x: np.ndarray) -> np.ndarray:
        if self.dense_storage:
            return self.K @ x
        return _kernels.gather_matvec(self.weights, self.nbr, x)

    def dense_K(self) -> np.ndarray:
        if self.dense_storage:
            return self.K
        check_dense(self.n, "KernelDenoiser.dense_K")
        K = np.zeros((self.n, self.n))
        rows = np.repeat(np.arange(self.n), self.nbr.shape[1])
        K[rows, self.nbr.ravel()] = self.weights.ravel()
        return K

    # -- denoiser application ------------------------------------------------

    def apply(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float).ravel()
        if x.size != self.n:
            raise ConfigError(f"apply: expected length {self.n}, got {x.size}")
        if self.kind == ROW_NORMALIZED:
            return self._kernel_matvec(x) / self.degrees
        return self.lam * self._kernel_matvec(self.lam * x)

    def apply_adjoint(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float).ravel()
        if x.size != self.n:
            raise ConfigError(f"apply_adjoint: expected length {self.n}, got {x.size}")
        if self.kind == ROW_NORMALIZED:
            return self._kernel_matvec(x / self.degrees)  # Wᵀ = K D^-1 by symmetry of K
        return self.lam * self._kernel_matvec(self.lam * x)

    def as_linop(self) -> LinOp:
        return LinOp(self.n, self.n, self.apply, self.apply_adjoint)

    def dense_W(self) -> np.ndarray:
        check_dense(self.n, "KernelDenoiser.dense_W")
        K = self.dense_K()
        if self.kind == ROW_NORMALIZED:
            return K / self.degrees[:, None]
        return (self.lam[:, None] * K) * self.lam[None, :]

    def dense_W0(self) -> np.ndarray:
        """The symmetric similarity form D^(1/2) W D^(-1/2)."""
        check_dense(self.n, "KernelDenoiser.dense_W0")
        if self.kind == ROW_NORMALIZED:
            s = 1.0 / np.sqrt(self.degrees)
            W0 = (s[:, None] * self.dense_K()) * s[None, :]
            return 0.5 * (W0 + W0.T)
        return self.dense_W()


def _validate_kernel_matrix(K: np.ndarray) -> np.ndarray:
    K = np.asarray(K, dtype=float)
    if K.ndim != 2 or K.shape[0] != K.shape[1]:
        raise ConfigError("kernel matrix must be square")
    if np.any(K < 0):
        raise ConfigError("kernel matrix must be nonnegative")
    dev = float(np.max(np.abs(K - K.T)))
    if dev > 1e-12:
        raise ConfigError(f"kernel matrix not symmetric (deviation {dev:.3e})")
    if np.any(K @ np.ones(K.shape[0]) <= 0):
        raise ConfigError("kernel matrix must have positive row sums")
    return K


def from_dense_kernel(K: np.ndarray, shape=None) -> KernelDenoiser:
    """Wrap an explicit kernel matrix (used for hand-built and negative tests)."""
    K = _validate_kernel_matrix(K)
    n = K.shape[0]
    if shape is None:
        shape = (1, n)
    return KernelDenoiser(shape, ROW_NORMALIZED, K=K)


def build_kernel(params: KernelParams) -> KernelDenoiser:
    """Row-normalized patch kernel denoiser from a guide image."""
    guide = np.asarray(params.guide, dtype=float)
    patches = patch_matrix(guide, params.patch_radius)
    h = params.resolve_bandwidth(patches)
    inv_h2 = 1.0 / (h * h)
    shape = guide.shape
    if params.search_radius is None:
        check_dense(patches.shape[0], "build_kernel FULL search")
        K = _kernels.full_kernel(patches, inv_h2)
        return KernelDenoiser(shape, ROW_NORMALIZED, K=K)
    nbr = _kernels.neighbor_indices(shape[0], shape[1], params.search_radius)
    weights = _kernels.windowed_weights(patches, nbr, inv_h2)
    return KernelDenoiser(shape, ROW_NORMALIZED, weights=weights, nbr=nbr)


def symmetrize_sinkhorn(
    kd: KernelDenoiser, tol: float = SINKHORN_TOL, max_iter: int = SINKHORN_MAX_ITER
) -> KernelDenoiser:
    """Positive diagonal Lam with W = Lam K Lam doubly stochastic.

    Damped multiplicative iteration lam <- lam / sqrt(lam * (K lam)): the
    fixed point satisfies lam_i (K lam)_i = 1, i.e. unit row sums, and the
    square root halves the step of the raw update lam <- 1 / (K lam).
    W inherits symmetry from K and positive semidefiniteness by congruence.
    """
    lam = 1.0 / np.sqrt(kd._kernel_matvec(np.ones(kd.n)))
    deviation = np.inf
    for _ in range(max_iter):
        row = lam * kd._kernel_matvec(lam)
        deviation = float(np.max(np.abs(row - 1.0)))
        if deviation <= tol:
            break
        lam = lam / np.sqrt(row)
    else:
        raise NumericalError(
            f"sinkhorn: row sums off by {deviation:.3e} after {max_iter} iterations",
            residual=deviation,
            iterations=max_iter,
        )
    if kd.dense_storage:
        return KernelDenoiser(kd.shape, SYMMETRIC_DS, K=kd.K, lam=lam)
    return KernelDenoiser(kd.shape, SYMMETRIC_DS, weights=kd.weights, nbr=kd.nbr, lam=lam)


@dataclass(frozen=True)
class SpectralCertificate:
    kind: str
    n: int
    min_eig: float
    max_eig: float
    eig1_multiplicity: int
    eig_gap: float  # 1 - (second largest eigenvalue)
    nonsingular: bool
    psd: bool
    eig1_simple: bool
    norm2_W0: float
    stochastic_dev: float

    def summary(self) -> str:
        return (
            f"{self.kind} n={self.n}: eig range [{self.min_eig:.3e}, {self.max_eig:.9f}], "
            f"mult(1)={self.eig1_multiplicity}, gap={self.eig_gap:.3e}, "
            f"nonsingular={self.nonsingular}, psd={self.psd}, "
            f"||W0||_2={self.norm2_W0:.9f}, stoch_dev={self.stochastic_dev:.3e}"
        )


def spectral_certificate(kd: KernelDenoiser, tol: float = 1e-9) -> SpectralCertificate:
    """Eigen-facts of the symmetric similarity form W0 (desk scale, dense only)."""
    if not kd.dense_storage:
        raise ConfigError(
            "spectral_certificate requires FULL-search (dense) kernels; "
            "windowed kernels are excluded from PSD certification"
        )
    W0 = kd.dense_W0()
    w, _ = eig_sym(W0)
    mult1 = int(np.count_nonzero(np.abs(w - 1.0) <= tol))
    second = float(w[-2]) if w.size > 1 else -np.inf
    dev = float(np.max(np.abs(kd.apply(np.ones(kd.n)) - 1.0)))
    return SpectralCertificate(
        kind=kd.kind,
        n=kd.n,
        min_eig=float(w[0]),
        max_eig=float(w[-1]),
        eig1_multiplicity=mult1,
        eig_gap=float(1.0 - second),
        nonsingular=bool(np.min(np.abs(w)) > tol),
        psd=bool(w[0] >= -tol),
        eig1_simple=bool(mult1 == 1 and 1.0 - second > tol),
        norm2_W0=float(np.max(np.abs(w))),
        stochastic_dev=dev,
    )


def build_nlm(
    guide: np.ndarray,
    patch_radius: int = 1,
    search_radius: Optional[int] = None,
    bandwidth: Optional[float] = None,
    bandwidth_scale: float = DEFAULT_BANDWIDTH_SCALE,
) -> KernelDenoiser:
    return build_kernel(
        KernelParams(
            guide=guide,
            patch_radius=patch_radius,
            search_radius=search_radius,
            bandwidth=bandwidth,
            bandwidth_scale=bandwidth_scale,
        )
    )


def build_denoiser(name: str, guide: np.ndarray, **kwargs) -> KernelDenoiser:
    """nlm -> row-normalized kernel denoiser; dsg_nlm -> symmetrized variant."""
    if name == "nlm":
        return build_nlm(guide, **kwargs)
    if name == "dsg_nlm":
        return symmetrize_sinkhorn(build_nlm(guide, **kwargs))
    raise ConfigError(f"unknown denoiser {name!r} (expected nlm|dsg_nlm)")
