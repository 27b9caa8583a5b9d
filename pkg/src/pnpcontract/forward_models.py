"""Measurement operators for inpainting, deblurring, and superresolution.

All three operators act on flattened (height*width,) vectors.  Blur uses
circular boundary so the blur matrix is exactly circulant: its operator
norm is 1 for a stochastic kernel and the quadratic prox diagonalizes in
the frequency domain.  Inpainting keeps the square-diagonal form (output
stays length n with zeroed unobserved pixels), which keeps the PnP maps
square without index bookkeeping.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, NumericalError
from .linops import LinOp, power_method_sv
from .rng import Xoshiro256

CG_TOL = 1e-10
CG_MAX_ITER = 2000


@dataclass(frozen=True)
class InpaintMask:
    """Observed-pixel indicator over the flattened image."""

    observed: np.ndarray  # bool, shape (n,)

    def __post_init__(self):
        obs = np.asarray(self.observed, dtype=bool).ravel()
        object.__setattr__(self, "observed", obs)

    @property
    def sampling_fraction(self) -> float:
        return float(np.count_nonzero(self.observed)) / self.observed.size

    def validate(self) -> None:
        if not self.observed.any():
            raise ConfigError("inpainting mask observes no pixels")

    @staticmethod
    def random(n: int, fraction: float, seed: int) -> "InpaintMask":
        if not 0.0 < fraction <= 1.0:
            raise ConfigError("sampling fraction must be in (0, 1]")
        k = max(1, int(round(fraction * n)))
        idx = Xoshiro256(seed).sample_indices(n, k)
        observed = np.zeros(n, dtype=bool)
        observed[idx] = True
        return InpaintMask(observed)


@dataclass(frozen=True)
class BlurKernel:
    """Nonnegative taps summing to 1 (stochastic blur), circular boundary."""

    taps: np.ndarray

    def __post_init__(self):
        taps = np.asarray(self.taps, dtype=float)
        if taps.ndim != 2 or taps.shape[0] != taps.shape[1] or taps.shape[0] % 2 == 0:
            raise ConfigError("blur taps must be a square odd-sized grid")
        if np.any(taps < 0):
            raise ConfigError("blur taps must be nonnegative")
        if abs(taps.sum() - 1.0) > 1e-9:
            raise ConfigError(f"blur taps must sum to 1 (got {taps.sum():.12f})")
        object.__setattr__(self, "taps", taps)

    @staticmethod
    def uniform(size: int) -> "BlurKernel":
        return BlurKernel(np.full((size, size), 1.0 / (size * size)))


def _psf_otf(taps: np.ndarray, shape: tuple[int, int]) -> np.ndarray:
    H, W = shape
    k = taps.shape[0]
    if k > H or k > W:
        raise ConfigError(f"{k}x{k} blur kernel larger than {H}x{W} image")
    r = k // 2
    psf = np.zeros(shape)
    for dy in range(-r, r + 1):
        for dx in range(-r, r + 1):
            psf[dy % H, dx % W] = taps[r + dy, r + dx]
    return np.fft.fft2(psf)


class ForwardModel:
    """Common interface: apply / apply_adjoint on flat vectors, prox of rho*f."""

    kind: str
    shape: tuple[int, int]
    n: int
    m: int

    def apply(self, x: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def apply_adjoint(self, y: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def prox_quadratic(self, rho, v, b, tol=CG_TOL):
        """argmin_x 0.5*||v - x||^2 + 0.5*rho*||Ax - b||^2."""
        raise NotImplementedError

    def spectral_radius_AtA(self) -> float:
        res = power_method_sv(self.as_linop(), tol=1e-12, max_iter=20000, seed=7)
        return res.value**2

    def as_linop(self) -> LinOp:
        return LinOp(self.m, self.n, self.apply, self.apply_adjoint)

    def normal_op(self, rho: float) -> LinOp:
        """x ↦ (I + rho AᵀA) x."""
        return LinOp(
            self.n,
            self.n,
            lambda x: x + rho * self.apply_adjoint(self.apply(x)),
            lambda x: x + rho * self.apply_adjoint(self.apply(x)),
        )

    def dense_A(self) -> np.ndarray:
        return np.column_stack([self.apply(e) for e in np.eye(self.n)])

    def _check_dim(self, v: np.ndarray, dim: int, name: str) -> np.ndarray:
        v = np.asarray(v, dtype=float).ravel()
        if v.size != dim:
            raise ConfigError(f"{self.kind}.{name}: expected length {dim}, got {v.size}")
        return v


class Inpainting(ForwardModel):
    kind = "inpaint"

    def __init__(self, shape: tuple[int, int], mask: InpaintMask, allow_empty: bool = False):
        self.shape = shape
        self.n = self.m = shape[0] * shape[1]
        if mask.observed.size != self.n:
            raise ConfigError("mask size does not match image size")
        if not allow_empty:
            mask.validate()
        self.mask = mask
        self._sel = mask.observed.astype(float)

    def apply(self, x):
        return self._check_dim(x, self.n, "apply") * self._sel

    def apply_adjoint(self, y):
        return self._check_dim(y, self.m, "apply_adjoint") * self._sel

    def spectral_radius_AtA(self):
        # diagonal 0/1 operator: analytic short-circuit
        return 1.0 if self.mask.observed.any() else 0.0

    def prox_quadratic(self, rho, v, b, tol=CG_TOL):
        if rho <= 0:
            raise ConfigError("prox_quadratic: rho must be positive")
        v = self._check_dim(v, self.n, "prox")
        b = self._check_dim(b, self.m, "prox")
        out = v.copy()
        obs = self.mask.observed
        out[obs] = (v[obs] + rho * b[obs]) / (1.0 + rho)
        return out


class Deblurring(ForwardModel):
    kind = "deblur"

    def __init__(self, shape: tuple[int, int], kernel: BlurKernel):
        self.shape = shape
        self.n = self.m = shape[0] * shape[1]
        self.kernel = kernel
        self._otf = _psf_otf(kernel.taps, shape)

    def _conv(self, x, otf):
        X = np.fft.fft2(x.reshape(self.shape))
        return np.real(np.fft.ifft2(X * otf)).ravel()

    def apply(self, x):
        return self._conv(self._check_dim(x, self.n, "apply"), self._otf)

    def apply_adjoint(self, y):
        return self._conv(self._check_dim(y, self.m, "apply_adjoint"), np.conj(self._otf))

    def prox_quadratic(self, rho, v, b, tol=CG_TOL):
        if rho <= 0:
            raise ConfigError("prox_quadratic: rho must be positive")
        v = self._check_dim(v, self.n, "prox")
        b = self._check_dim(b, self.m, "prox")
        V = np.fft.fft2(v.reshape(self.shape))
        B = np.fft.fft2(b.reshape(self.shape))
        X = (V + rho * np.conj(self._otf) * B) / (1.0 + rho * np.abs(self._otf) ** 2)
        return np.real(np.fft.ifft2(X)).ravel()


class Superresolution(ForwardModel):
    kind = "superres"

    def __init__(self, shape: tuple[int, int], kernel: BlurKernel, factor: int):
        H, W = shape
        if factor < 1:
            raise ConfigError("superres factor must be >= 1")
        if H % factor or W % factor:
            raise ConfigError(f"{H}x{W} image not divisible by factor {factor}")
        self.shape = shape
        self.factor = factor
        self.n = H * W
        self.m = self.n // (factor * factor)
        self.out_shape = (H // factor, W // factor)
        self.kernel = kernel
        self._otf = _psf_otf(kernel.taps, shape)

    def apply(self, x):
        x = self._check_dim(x, self.n, "apply")
        blurred = np.real(np.fft.ifft2(np.fft.fft2(x.reshape(self.shape)) * self._otf))
        return blurred[:: self.factor, :: self.factor].ravel()

    def apply_adjoint(self, y):
        y = self._check_dim(y, self.m, "apply_adjoint")
        up = np.zeros(self.shape)
        up[:: self.factor, :: self.factor] = y.reshape(self.out_shape)
        return np.real(np.fft.ifft2(np.fft.fft2(up) * np.conj(self._otf))).ravel()

    def prox_quadratic(self, rho, v, b, tol=CG_TOL):
        if rho <= 0:
            raise ConfigError("prox_quadratic: rho must be positive")
        v = self._check_dim(v, self.n, "prox")
        b = self._check_dim(b, self.m, "prox")
        rhs = v + rho * self.apply_adjoint(b)
        normal = self.normal_op(rho)
        return _conjugate_gradient(normal.apply, rhs, tol=tol, max_iter=CG_MAX_ITER)


def _conjugate_gradient(apply_M, rhs, tol, max_iter):
    """CG for an SPD system M x = rhs, to a relative residual tolerance."""
    x = np.zeros_like(rhs)
    r = rhs.copy()
    p = r.copy()
    rs = float(r @ r)
    target = tol * np.sqrt(float(rhs @ rhs))
    if np.sqrt(rs) <= target:
        return x
    for _ in range(max_iter):
        Mp = apply_M(p)
        alpha = rs / float(p @ Mp)
        x += alpha * p
        r -= alpha * Mp
        rs_new = float(r @ r)
        if np.sqrt(rs_new) <= target:
            return x
        p = r + (rs_new / rs) * p
        rs = rs_new
    raise NumericalError(
        f"conjugate gradient: no convergence in {max_iter} iterations",
        residual=float(np.sqrt(rs)),
        iterations=max_iter,
    )


def make_forward_model(
    task: str,
    shape: tuple[int, int],
    sample_fraction: float = 0.3,
    blur_size: int = 11,
    sr_factor: int = 2,
    seed: int = 0,
) -> ForwardModel:
    if task == "inpaint":
        n = shape[0] * shape[1]
        return Inpainting(shape, InpaintMask.random(n, sample_fraction, seed))
    if task == "deblur":
        return Deblurring(shape, BlurKernel.uniform(blur_size))
    if task == "superres":
        return Superresolution(shape, BlurKernel.uniform(blur_size), sr_factor)
    raise ConfigError(f"unknown task {task!r} (expected inpaint|deblur|superres)")
