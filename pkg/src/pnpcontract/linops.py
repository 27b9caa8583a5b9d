"""Matrix-free linear operators and the small dense linear algebra they need.

Operator norms are largest singular values, so the power method iterates
on the normal operator QᵀQ (two applies per step); the nonsymmetric PnP
maps P and R make plain power iteration on Q itself meaningless here.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, NamedTuple

import numpy as np

from .backend import check_dense
from .errors import ConfigError, NumericalError
from .rng import Xoshiro256

SYMMETRY_TOL = 1e-12
PM1_TOL = 1e-9  # |lambda -+ 1| below this counts as a +-1 eigenvalue


@dataclass(frozen=True)
class LinOp:
    """Linear map with an explicit adjoint; shape is (n_out, n_in)."""

    n_out: int
    n_in: int
    apply: Callable[[np.ndarray], np.ndarray]
    apply_adjoint: Callable[[np.ndarray], np.ndarray]

    @property
    def square(self) -> bool:
        return self.n_out == self.n_in

    def dense(self) -> np.ndarray:
        check_dense(max(self.n_in, self.n_out), "LinOp.dense")
        cols = [self.apply(e) for e in np.eye(self.n_in)]
        return np.column_stack(cols)


def identity_op(n: int) -> LinOp:
    return LinOp(n, n, lambda x: x.copy(), lambda x: x.copy())


def diagonal_op(d: np.ndarray) -> LinOp:
    d = np.asarray(d, dtype=float)
    return LinOp(d.size, d.size, lambda x: d * x, lambda x: d * x)


def matrix_op(M: np.ndarray) -> LinOp:
    M = np.asarray(M, dtype=float)
    MT = M.T.copy()
    return LinOp(M.shape[0], M.shape[1], lambda x: M @ x, lambda x: MT @ x)


def compose(outer: LinOp, inner: LinOp) -> LinOp:
    if outer.n_in != inner.n_out:
        raise ConfigError("compose: dimension mismatch")
    return LinOp(
        outer.n_out,
        inner.n_in,
        lambda x: outer.apply(inner.apply(x)),
        lambda x: inner.apply_adjoint(outer.apply_adjoint(x)),
    )


def adjoint_mismatch(op: LinOp, probes: int = 20, seed: int = 0) -> float:
    """Worst relative <Ax,y> vs <x,Aᵀy> discrepancy over random probes."""
    rng = Xoshiro256(seed)
    worst = 0.0
    for _ in range(probes):
        x = rng.normals(op.n_in)
        y = rng.normals(op.n_out)
        ax = op.apply(x)
        aty = op.apply_adjoint(y)
        lhs = float(ax @ y)
        rhs = float(x @ aty)
        scale = np.linalg.norm(x) * np.linalg.norm(y) * max(
            np.linalg.norm(ax) / max(np.linalg.norm(x), 1e-300), 1e-30
        )
        worst = max(worst, abs(lhs - rhs) / max(scale, 1e-300))
    return worst


class PowerResult(NamedTuple):
    value: float
    iterations: int
    converged: bool


def power_method_sv(
    op: LinOp, tol: float = 1e-10, max_iter: int = 10000, seed: int = 0
) -> PowerResult:
    """Largest singular value of ``op`` by power iteration on QᵀQ.

    Runs twice, from start vectors drawn with ``seed`` and ``seed + 1``,
    and keeps the larger estimate; a single unlucky start orthogonal to
    the top singular subspace would otherwise go undetected.  Convergence
    is declared when successive Rayleigh quotients of QᵀQ agree to ``tol``
    relatively.  Non-convergence is not an error: the best estimate is
    returned with ``converged=False``.
    """
    if tol <= 0:
        raise ConfigError("power_method_sv: tol must be positive")
    if max_iter < 1:
        raise ConfigError("power_method_sv: max_iter must be >= 1")

    best = 0.0
    total_iters = 0
    best_converged = False
    for s in (seed, seed + 1):
        v = Xoshiro256(s).unit_vector(op.n_in)
        rayleigh_prev = -1.0
        converged = False
        value = 0.0
        for it in range(1, max_iter + 1):
            w = op.apply(v)
            rayleigh = float(w @ w)  # vᵀQᵀQv for unit v
            value = np.sqrt(max(rayleigh, 0.0))
            total_iters += 1
            if rayleigh_prev >= 0.0 and abs(rayleigh - rayleigh_prev) <= tol * max(
                rayleigh, 1e-300
            ):
                converged = True
                break
            rayleigh_prev = rayleigh
            z = op.apply_adjoint(w)
            znorm = float(np.linalg.norm(z))
            if znorm == 0.0:
                converged = True  # v is in the null space of QᵀQ; sigma est 0
                break
            v = z / znorm
        if value > best or (value == best and converged):
            best = value
            best_converged = converged
    return PowerResult(best, total_iters, best_converged)


def eig_sym(M: np.ndarray, sym_tol: float = SYMMETRY_TOL):
    """Eigendecomposition of a symmetric matrix: ascending values, orthonormal columns."""
    M = np.asarray(M, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ConfigError("eig_sym: square matrix expected")
    dev = float(np.max(np.abs(M - M.T))) if M.size else 0.0
    if dev > sym_tol:
        raise ConfigError(f"eig_sym: matrix not symmetric (max |Mij - Mji| = {dev:.3e})")
    check_dense(M.shape[0], "eig_sym")
    w, V = np.linalg.eigh(0.5 * (M + M.T))
    return w, V


def spectral_norm_dense(M: np.ndarray) -> float:
    """Largest singular value via full dense SVD (the oracle route)."""
    return float(np.linalg.svd(np.asarray(M, dtype=float), compute_uv=False)[0])


def subspace_intersection_dim(
    U_basis: np.ndarray, V_basis: np.ndarray, tol: float = PM1_TOL
) -> int:
    """dim(U ∩ V) = number of singular values of UᵀV within ``tol`` of 1."""
    U = np.atleast_2d(np.asarray(U_basis, dtype=float))
    V = np.atleast_2d(np.asarray(V_basis, dtype=float))
    if U.shape[1] == 0 or V.shape[1] == 0:
        return 0
    for name, B in (("U", U), ("V", V)):
        gram_dev = float(np.max(np.abs(B.T @ B - np.eye(B.shape[1]))))
        if gram_dev > 1e-8:
            raise ConfigError(
                f"subspace_intersection_dim: {name} basis not orthonormal "
                f"(Gram deviation {gram_dev:.3e})"
            )
    sv = np.linalg.svd(U.T @ V, compute_uv=False)
    return int(np.count_nonzero(sv >= 1.0 - tol))


def eigenspace_basis(M: np.ndarray, target: float, tol: float = PM1_TOL) -> np.ndarray:
    """Orthonormal basis (columns) of the eigenspace of symmetric M near ``target``."""
    w, V = eig_sym(M)
    mask = np.abs(w - target) <= tol
    return V[:, mask]


def pm1_eigenspace_basis(M: np.ndarray, tol: float = PM1_TOL) -> np.ndarray:
    """Orthonormal basis of the span of eigenvectors with eigenvalue within tol of +-1."""
    w, V = eig_sym(M)
    mask = np.abs(np.abs(w) - 1.0) <= tol
    return V[:, mask]


def null_space_basis(A: np.ndarray, tol: float = PM1_TOL) -> np.ndarray:
    """Orthonormal basis of N(A) for a dense (possibly rectangular) A."""
    A = np.asarray(A, dtype=float)
    if A.size == 0:
        return np.eye(A.shape[1])
    _, sv, Vt = np.linalg.svd(A, full_matrices=True)
    rank = int(np.count_nonzero(sv > tol))
    return Vt[rank:].T


def solve_fixed_point(Q_dense: np.ndarray, r: np.ndarray) -> np.ndarray:
    """Exact fixed point x* = (I - Q)⁻¹ r of the affine map x ↦ Qx + r."""
    n = Q_dense.shape[0]
    try:
        return np.linalg.solve(np.eye(n) - Q_dense, r)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"fixed-point solve failed: {exc}") from exc
