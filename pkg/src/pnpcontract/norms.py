"""Operator norms in the Euclidean and degree-weighted (D) norms.

||Q||_D is the largest singular value of D^(1/2) Q D^(-1/2), so the
D-norm estimate runs the power method on the conjugated operator built
matrix-free from the two diagonal scalings; image-scale sweeps never
materialize the similarity transform.  The dense conjugation is kept as
the desk-scale oracle in the test suite.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Optional

import numpy as np

from .denoisers import KernelDenoiser
from .errors import ConfigError
from .forward_models import ForwardModel
from .iterations import build_ista_affine, build_u_operator
from .linops import LinOp, PowerResult, power_method_sv

EUCLID = "euclid"
DNORM = "D"


@dataclass(frozen=True)
class WeightedNorm:
    """Diagonal-weighted norm; d=None is the Euclidean norm."""

    d: Optional[np.ndarray] = None

    def __post_init__(self):
        if self.d is not None:
            d = np.asarray(self.d, dtype=float).ravel()
            if np.any(d <= 0):
                raise ConfigError("weighted norm needs strictly positive weights")
            object.__setattr__(self, "d", d)

    @property
    def kind(self) -> str:
        return EUCLID if self.d is None else DNORM

    def of(self, x: np.ndarray) -> float:
        x = np.asarray(x, dtype=float).ravel()
        if self.d is None:
            return float(np.linalg.norm(x))
        if x.size != self.d.size:
            raise ConfigError("weighted_norm: dimension mismatch")
        return float(np.sqrt(np.sum(self.d * x * x)))


def weighted_norm(x: np.ndarray, wn: WeightedNorm) -> float:
    return wn.of(x)


def conjugated_op(Q: LinOp, d: np.ndarray) -> LinOp:
    """D^(1/2) Q D^(-1/2) as a matrix-free operator."""
    s = np.sqrt(np.asarray(d, dtype=float).ravel())
    inv_s = 1.0 / s
    return LinOp(
        Q.n_out,
        Q.n_in,
        lambda x: s * Q.apply(inv_s * x),
        lambda x: inv_s * Q.apply_adjoint(s * x),
    )


@dataclass(frozen=True)
class NormEstimate:
    value: float
    norm_kind: str
    converged: bool
    iterations: int


def operator_norm(
    Q: LinOp,
    wn: WeightedNorm = WeightedNorm(),
    tol: float = 1e-10,
    max_iter: int = 10000,
    seed: int = 0,
) -> NormEstimate:
    op = Q if wn.d is None else conjugated_op(Q, wn.d)
    res: PowerResult = power_method_sv(op, tol=tol, max_iter=max_iter, seed=seed)
    return NormEstimate(
        value=res.value, norm_kind=wn.kind, converged=res.converged, iterations=res.iterations
    )


@dataclass(frozen=True)
class SweepRow:
    param_kind: str  # "gamma" | "rho"
    param_value: float
    norm_kind: str
    value: float
    converged: bool
    iterations: int


def contraction_sweep(
    builder: str,
    denoiser: KernelDenoiser,
    fm: ForwardModel,
    b: np.ndarray,
    params: Iterable[float],
    norms: Iterable[str] = (EUCLID, DNORM),
    tol: float = 1e-9,
    max_iter: int = 20000,
    seed: int = 0,
) -> list[SweepRow]:
    """Norm estimates of the PnP map across a gamma (ISTA) or rho (ADMM) sweep."""
    params = list(params)
    if not params:
        raise ConfigError("contraction_sweep: empty parameter list")
    if builder == "ista":
        param_kind = "gamma"
        make = lambda v: build_ista_affine(denoiser, fm, b, v)
    elif builder == "admm":
        param_kind = "rho"
        make = lambda v: build_u_operator(denoiser, fm, b, v)
    else:
        raise ConfigError(f"unknown builder {builder!r} (expected ista|admm)")
    wanted = list(norms)
    for nk in wanted:
        if nk not in (EUCLID, DNORM):
            raise ConfigError(f"unknown norm kind {nk!r}")
    rows = []
    for value in params:
        it = make(float(value))
        for nk in wanted:
            wn = WeightedNorm() if nk == EUCLID else WeightedNorm(denoiser.degrees)
            est = operator_norm(it.Q, wn, tol=tol, max_iter=max_iter, seed=seed)
            rows.append(
                SweepRow(
                    param_kind=param_kind,
                    param_value=float(value),
                    norm_kind=nk,
                    value=est.value,
                    converged=est.converged,
                    iterations=est.iterations,
                )
            )
    return rows
