"""PnP-ISTA and PnP-ADMM engines and their affine-map forms.

Both algorithms are affine in the iterate once the denoiser is linear:

* ISTA: x_{k+1} = P x_k + q with P = W(I - gamma AᵀA), q = gamma W Aᵀ b.
* ADMM: the auxiliary sequence u_1 = y_1 + z_1,
  u_{k+1} = R u_k + s with R = (I + FV)/2, F = 2(I + rho AᵀA)^-1 - I,
  V = 2W - I, satisfies y_k = W u_k for k >= 1.

The offsets q and s are the images of the zero vector under the true
affine updates, so iteration with them reproduces the engines exactly.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .denoisers import KernelDenoiser
from .errors import ConfigError
from .forward_models import CG_TOL, ForwardModel
from .linops import LinOp

DIVERGENCE_DECADES = 3.0


@dataclass
class IstaConfig:
    gamma: float
    max_iter: int = 100
    stop_tol: float = 1e-9
    theorem_mode: bool = False

    def validate(self, fm: Optional[ForwardModel] = None) -> None:
        if self.gamma <= 0:
            raise ConfigError("gamma must be positive")
        if self.theorem_mode:
            if fm is not None:
                cap = 2.0 / fm.spectral_radius_AtA()
            else:
                cap = 2.0
            if not self.gamma < cap:
                raise ConfigError(
                    f"theorem mode requires step size gamma in (0, {cap:g}); "
                    f"got gamma = {self.gamma:g}"
                )


@dataclass
class AdmmConfig:
    rho: float
    max_iter: int = 100
    stop_tol: float = 1e-9

    def validate(self) -> None:
        if self.rho <= 0:
            raise ConfigError("rho must be positive")


@dataclass
class AdmmState:
    x: np.ndarray
    y: np.ndarray
    z: np.ndarray


def ista_step(
    x: np.ndarray, denoiser: KernelDenoiser, fm: ForwardModel, b: np.ndarray, gamma: float
) -> np.ndarray:
    """One update x <- W(x - gamma (AᵀA x - Aᵀ b))."""
    grad = fm.apply_adjoint(fm.apply(x)) - fm.apply_adjoint(b)
    return denoiser.apply(x - gamma * grad)


def admm_step(
    state: AdmmState,
    denoiser: KernelDenoiser,
    fm: ForwardModel,
    b: np.ndarray,
    rho: float,
    prox_tol: float = CG_TOL,
) -> AdmmState:
    """One round of the three updates: prox on the data term, denoise, dual ascent."""
    x = fm.prox_quadratic(rho, state.y - state.z, b, tol=prox_tol)
    y = denoiser.apply(x + state.z)
    z = state.z + x - y
    return AdmmState(x=x, y=y, z=z)


@dataclass
class AffineIteration:
    """The map x ↦ Qx + r; Q is P for ISTA, R for the ADMM u-sequence."""

    Q: LinOp
    r: np.ndarray
    kind: str  # "ista_P" | "admm_R"
    dense_Q: Optional[np.ndarray] = None

    @property
    def n(self) -> int:
        return self.r.size

    def step(self, x: np.ndarray) -> np.ndarray:
        return self.Q.apply(x) + self.r

    def materialize(self) -> np.ndarray:
        if self.dense_Q is None:
            self.dense_Q = self.Q.dense()
        return self.dense_Q


def build_ista_affine(
    denoiser: KernelDenoiser,
    fm: ForwardModel,
    b: np.ndarray,
    gamma: float,
    dense: bool = False,
) -> AffineIteration:
    if gamma < 0:
        raise ConfigError("gamma must be nonnegative")

    def apply_P(x):
        return denoiser.apply(x - gamma * fm.apply_adjoint(fm.apply(x)))

    def apply_Pt(x):
        w = denoiser.apply_adjoint(x)
        return w - gamma * fm.apply_adjoint(fm.apply(w))

    Q = LinOp(fm.n, fm.n, apply_P, apply_Pt)
    q = gamma * denoiser.apply(fm.apply_adjoint(b))
    it = AffineIteration(Q=Q, r=q, kind="ista_P")
    if dense:
        it.materialize()
    return it


def build_u_operator(
    denoiser: KernelDenoiser,
    fm: ForwardModel,
    b: np.ndarray,
    rho: float,
    dense: bool = False,
    prox_tol: float = CG_TOL,
) -> AffineIteration:
    if rho <= 0:
        raise ConfigError("rho must be positive")
    zero_m = np.zeros(fm.m)

    def apply_F(x):
        # linear part of the prox: 2 (I + rho AᵀA)^-1 x - x
        return 2.0 * fm.prox_quadratic(rho, x, zero_m, tol=prox_tol) - x

    def apply_R(u):
        v = 2.0 * denoiser.apply(u) - u
        return 0.5 * (u + apply_F(v))

    def apply_Rt(u):
        fu = apply_F(u)  # F is symmetric
        return 0.5 * (u + 2.0 * denoiser.apply_adjoint(fu) - fu)

    Q = LinOp(fm.n, fm.n, apply_R, apply_Rt)
    s = fm.prox_quadratic(rho, np.zeros(fm.n), b, tol=prox_tol)  # image of 0 under the u-update
    it = AffineIteration(Q=Q, r=s, kind="admm_R")
    if dense:
        it.materialize()
    return it


@dataclass
class FixedPointRun:
    iterates: Optional[list]  # recorded iterates (None when not recorded)
    x_final: np.ndarray
    step_norms: list
    iterations: int
    converged: bool
    diverged: bool

    def residuals(self, norm_fn: Optional[Callable[[np.ndarray], float]] = None) -> np.ndarray:
        """||x_k - x*|| with x* the final recorded iterate."""
        if self.iterates is None:
            raise ConfigError("residuals need record_iterates=True")
        nf = norm_fn or (lambda v: float(np.linalg.norm(v)))
        return np.array([nf(x - self.x_final) for x in self.iterates])


def run_to_fixed_point(
    it: AffineIteration,
    x0: np.ndarray,
    max_iter: int = 100,
    stop_tol: float = 1e-9,
    record_iterates: bool = True,
) -> FixedPointRun:
    """Iterate x ↦ Qx + r until the step norm drops below stop_tol.

    Divergence (possible when the map is not a contraction) is a reported
    outcome, not an error: the run stops once the step norm has grown
    three decades above the smallest step seen.
    """
    x = np.asarray(x0, dtype=float).ravel().copy()
    iterates = [x.copy()] if record_iterates else None
    step_norms: list = []
    converged = False
    diverged = False
    smallest_step = np.inf
    k = 0
    for k in range(1, max_iter + 1):
        x_next = it.step(x)
        step = float(np.linalg.norm(x_next - x))
        step_norms.append(step)
        x = x_next
        if record_iterates:
            iterates.append(x.copy())
        if step < stop_tol:
            converged = True
            break
        smallest_step = min(smallest_step, max(step, 1e-300))
        if step > 10.0**DIVERGENCE_DECADES * smallest_step:
            diverged = True
            break
    return FixedPointRun(
        iterates=iterates,
        x_final=x,
        step_norms=step_norms,
        iterations=k,
        converged=converged,
        diverged=diverged,
    )


def run_ista_engine(
    x0: np.ndarray,
    denoiser: KernelDenoiser,
    fm: ForwardModel,
    b: np.ndarray,
    gamma: float,
    iters: int,
) -> list:
    xs = [np.asarray(x0, dtype=float).ravel().copy()]
    for _ in range(iters):
        xs.append(ista_step(xs[-1], denoiser, fm, b, gamma))
    return xs


def run_admm_engine(
    y0: np.ndarray,
    z0: np.ndarray,
    denoiser: KernelDenoiser,
    fm: ForwardModel,
    b: np.ndarray,
    rho: float,
    iters: int,
    prox_tol: float = CG_TOL,
):
    """ADMM trajectory; returns states for k = 1..iters (x_k, y_k, z_k)."""
    states = []
    state = AdmmState(x=np.zeros(fm.n), y=np.asarray(y0, float).ravel().copy(),
                      z=np.asarray(z0, float).ravel().copy())
    for _ in range(iters):
        state = admm_step(state, denoiser, fm, b, rho, prox_tol=prox_tol)
        states.append(state)
    return states
