"""Brute-force desk-scale verification of the contraction results.

Everything here is dense and capped at small image sizes: the if-and-only-if
claims need exact null spaces and full spectra, which the matrix-free forms
cannot certify.  Norms on the dense side always come from full SVD, never
from the power method, so the two routes stay independent.

Checked claims, in the notation of the affine maps P (ISTA) and R (ADMM):

* composition lemma: for symmetric nonexpansive M, N, ||MN||_2 < 1 iff the
  +-1 eigenspaces of M and N intersect trivially;
* strict-contraction-off-the-fixed-subspace property of a single symmetric
  nonexpansive T;
* symmetric denoisers: ||P||_2 < 1 iff N(I-W) ∩ N(A) = {0} (any step size
  0 < gamma < 2/rho(AᵀA)), and the same condition for ||R||_2 < 1 at any
  rho > 0;
* kernel denoisers on inpainting: ||P||_D < 1 for 0 < gamma < 2, and
  ||R||_D < 1 for nonsingular W and rho > 0, where D = diag(Ke).  The
  Euclidean norms are recorded alongside to exhibit instances with
  ||P||_2 > 1 > ||P||_D.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .backend import check_dense
from .denoisers import (
    SYMMETRIC_DS,
    KernelDenoiser,
    SpectralCertificate,
    build_nlm,
    from_dense_kernel,
    spectral_certificate,
    symmetrize_sinkhorn,
)
from .errors import ConfigError
from .forward_models import ForwardModel, Inpainting, InpaintMask, make_forward_model
from .images import synthetic_texture
from .linops import (
    PM1_TOL,
    eig_sym,
    eigenspace_basis,
    null_space_basis,
    pm1_eigenspace_basis,
    spectral_norm_dense,
    subspace_intersection_dim,
)
from .rng import Xoshiro256

NORM_ONE_TOL = PM1_TOL  # norms within this of 1 are classified as "= 1"


def validate_sym_nonexpansive(M: np.ndarray, tol: float = 1e-9) -> np.ndarray:
    M = np.asarray(M, dtype=float)
    w, _ = eig_sym(M)  # raises on non-symmetric input
    if np.max(np.abs(w)) > 1.0 + tol:
        raise ConfigError(f"matrix is not nonexpansive: ||M||_2 = {np.max(np.abs(w)):.12f}")
    return M


def make_random_sym_nonexpansive(n: int, num_pm1: int = 0, seed: int = 0) -> np.ndarray:
    """Random symmetric matrix with spectrum in [-1, 1], num_pm1 eigenvalues at +-1.

    Interior eigenvalues are redrawn while within 1e-6 of +-1 so the
    +-1 classification at 1e-9 can never pick up a stray draw.
    """
    if not 0 <= num_pm1 <= n:
        raise ConfigError("num_pm1 must lie in [0, n]")
    rng = Xoshiro256(seed)
    Q, _ = np.linalg.qr(rng.normals((n, n)))
    eigs = np.empty(n)
    for i in range(n):
        if i < num_pm1:
            eigs[i] = 1.0 if rng.random() < 0.5 else -1.0
        else:
            lam = rng.uniform(-1.0, 1.0)
            while abs(abs(lam) - 1.0) < 1e-6:
                lam = rng.uniform(-1.0, 1.0)
            eigs[i] = lam
    M = (Q * eigs) @ Q.T
    return 0.5 * (M + M.T)


def _pair_with_shared_pm1(n: int, seed: int):
    """Two symmetric nonexpansive matrices sharing one +-1 eigenvector."""
    rng = Xoshiro256(seed)
    v = rng.unit_vector(n)

    def build():
        B = np.column_stack([v, rng.normals((n, n - 1))])
        Q, _ = np.linalg.qr(B)
        eigs = np.empty(n)
        eigs[0] = 1.0 if rng.random() < 0.5 else -1.0
        for i in range(1, n):
            lam = rng.uniform(-1.0, 1.0)
            while abs(abs(lam) - 1.0) < 1e-6:
                lam = rng.uniform(-1.0, 1.0)
            eigs[i] = lam
        M = (Q * eigs) @ Q.T
        return 0.5 * (M + M.T)

    return build(), build()


@dataclass(frozen=True)
class TheoremVerdict:
    theorem_id: str
    instance_id: str
    condition_holds: bool
    norm_value: float
    norm_kind: str
    norm_lt_one: bool
    agree: bool
    margin: float
    note: str = ""


def check_lemma1(M: np.ndarray, N: np.ndarray, tol: float = PM1_TOL,
                 instance_id: str = "") -> TheoremVerdict:
    M = validate_sym_nonexpansive(M)
    N = validate_sym_nonexpansive(N)
    U = pm1_eigenspace_basis(M, tol)
    V = pm1_eigenspace_basis(N, tol)
    condition = subspace_intersection_dim(U, V, tol) == 0
    norm = spectral_norm_dense(M @ N)
    norm_lt_one = norm < 1.0 - NORM_ONE_TOL
    return TheoremVerdict(
        theorem_id="lemma1",
        instance_id=instance_id,
        condition_holds=condition,
        norm_value=norm,
        norm_kind="euclid",
        norm_lt_one=norm_lt_one,
        agree=condition == norm_lt_one,
        margin=abs(1.0 - norm),
    )


def lemma1_campaign(trials: int = 200, n_lo: int = 6, n_hi: int = 12,
                    seed: int = 0) -> list[TheoremVerdict]:
    """Seeded random (M, N) pairs cycling through three instance families:
    generic strict contractions, independent +-1 eigenspaces, and a planted
    shared +-1 direction.  Every verdict must agree for the lemma to hold.
    """
    rng = Xoshiro256(seed)
    verdicts = []
    for t in range(trials):
        n = n_lo + rng.randbelow(n_hi - n_lo + 1)
        family = t % 3
        sub = seed * 1_000_003 + t * 7919
        if family == 0:
            M = make_random_sym_nonexpansive(n, 0, seed=sub)
            N = make_random_sym_nonexpansive(n, 0, seed=sub + 1)
            fam = "generic"
        elif family == 1:
            k_m = 1 + rng.randbelow(max(n // 2, 1))
            k_n = 1 + rng.randbelow(max(n // 2, 1))
            M = make_random_sym_nonexpansive(n, k_m, seed=sub)
            N = make_random_sym_nonexpansive(n, k_n, seed=sub + 1)
            fam = "disjoint_pm1"
        else:
            M, N = _pair_with_shared_pm1(n, seed=sub)
            fam = "shared_pm1"
        verdicts.append(check_lemma1(M, N, instance_id=f"{fam}/n={n}/trial={t}"))
    return verdicts


@dataclass(frozen=True)
class Prop3Report:
    off_samples: int
    on_samples: int
    min_off_margin: float  # min over samples of (||z|| - ||Tz||)/||z||
    max_on_deviation: float  # max over samples of | ||Tz|| - ||z|| | / ||z||
    ok: bool


def check_prop3(T: np.ndarray, trials: int = 100, seed: int = 0,
                strict_margin: float = 1e-12, preserve_tol: float = 1e-10) -> Prop3Report:
    """Strict norm decrease off the +-1 eigenspace, exact preservation on it."""
    T = validate_sym_nonexpansive(T)
    n = T.shape[0]
    Y = pm1_eigenspace_basis(T)
    dim_y = Y.shape[1]
    rng = Xoshiro256(seed)

    min_off = np.inf
    off_count = 0
    for _ in range(trials):
        if dim_y == n:
            break  # R^n \ Y is empty: the off-space claim is vacuous
        z = rng.normals(n)
        if dim_y:
            off = z - Y @ (Y.T @ z)
        else:
            off = z
        if np.linalg.norm(off) < 1e-8 * np.linalg.norm(z):
            continue
        nz = np.linalg.norm(z)
        min_off = min(min_off, (nz - np.linalg.norm(T @ z)) / nz)
        off_count += 1

    max_on = 0.0
    on_count = 0
    for _ in range(trials if dim_y else 0):
        z = Y @ rng.normals(dim_y)
        nz = np.linalg.norm(z)
        if nz < 1e-12:
            continue
        max_on = max(max_on, abs(np.linalg.norm(T @ z) - nz) / nz)
        on_count += 1

    ok = (off_count == 0 or min_off > strict_margin) and (
        on_count == 0 or max_on <= preserve_tol
    )
    return Prop3Report(
        off_samples=off_count,
        on_samples=on_count,
        min_off_margin=float(min_off if off_count else np.inf),
        max_on_deviation=float(max_on),
        ok=ok,
    )


def prop3_campaign(num_matrices: int = 100, samples: int = 100, n: int = 12,
                   seed: int = 0) -> list[Prop3Report]:
    reports = []
    rng = Xoshiro256(seed)
    for t in range(num_matrices):
        k = rng.randbelow(n // 2 + 1)
        T = make_random_sym_nonexpansive(n, k, seed=seed * 999983 + t)
        reports.append(check_prop3(T, trials=samples, seed=seed + t))
    return reports


# ---------------------------------------------------------------------------
# dense PnP operator builders
# ---------------------------------------------------------------------------


class DenseInstance:
    """Caches the dense pieces shared by all parameter values of one (W, A) pair."""

    def __init__(self, denoiser: KernelDenoiser, fm: ForwardModel):
        check_dense(fm.n, "theory dense instance")
        self.denoiser = denoiser
        self.fm = fm
        self.W = denoiser.dense_W()
        self.A = fm.dense_A()
        self.AtA = self.A.T @ self.A
        self.rho_AtA = fm.spectral_radius_AtA()
        self._null_A: Optional[np.ndarray] = None
        self._null_ImW: Optional[np.ndarray] = None
        self._null_W: Optional[np.ndarray] = None

    @property
    def n(self) -> int:
        return self.fm.n

    def null_A(self) -> np.ndarray:
        if self._null_A is None:
            self._null_A = null_space_basis(self.A)
        return self._null_A

    def null_ImW(self) -> np.ndarray:
        if self._null_ImW is None:
            self._null_ImW = eigenspace_basis(self.W, 1.0)
        return self._null_ImW

    def null_W(self) -> np.ndarray:
        if self._null_W is None:
            self._null_W = eigenspace_basis(self.W, 0.0)
        return self._null_W

    def condition_holds(self) -> bool:
        """N(I - W) ∩ N(A) = {0}."""
        return subspace_intersection_dim(self.null_ImW(), self.null_A()) == 0

    def dense_P(self, gamma: float) -> np.ndarray:
        return self.W @ (np.eye(self.n) - gamma * self.AtA)

    def dense_F(self, rho: float) -> np.ndarray:
        F = 2.0 * np.linalg.solve(np.eye(self.n) + rho * self.AtA, np.eye(self.n)) - np.eye(self.n)
        return 0.5 * (F + F.T)

    def dense_R(self, rho: float) -> np.ndarray:
        V = 2.0 * self.W - np.eye(self.n)
        return 0.5 * (np.eye(self.n) + self.dense_F(rho) @ V)


def check_theorem1(denoiser: KernelDenoiser, fm: ForwardModel, gamma: float,
                   instance: Optional[DenseInstance] = None,
                   instance_id: str = "") -> TheoremVerdict:
    """Symmetric denoiser, any forward model: ||P||_2 < 1 iff the condition holds."""
    if denoiser.kind != SYMMETRIC_DS:
        raise ConfigError("check_theorem1 needs a symmetric denoiser")
    inst = instance or DenseInstance(denoiser, fm)
    cap = np.inf if inst.rho_AtA == 0 else 2.0 / inst.rho_AtA
    if not 0 < gamma < cap:
        raise ConfigError(f"gamma={gamma} outside (0, {cap:g})")
    condition = inst.condition_holds()
    norm = spectral_norm_dense(inst.dense_P(gamma))
    norm_lt_one = norm < 1.0 - NORM_ONE_TOL
    return TheoremVerdict(
        theorem_id="theorem1",
        instance_id=instance_id,
        condition_holds=condition,
        norm_value=norm,
        norm_kind="euclid",
        norm_lt_one=norm_lt_one,
        agree=condition == norm_lt_one,
        margin=abs(1.0 - norm),
    )


def check_theorem2(denoiser: KernelDenoiser, fm: ForwardModel, rho: float,
                   instance: Optional[DenseInstance] = None,
                   instance_id: str = "") -> TheoremVerdict:
    """Symmetric denoiser, any forward model: ||R||_2 < 1 iff the condition holds."""
    if denoiser.kind != SYMMETRIC_DS:
        raise ConfigError("check_theorem2 needs a symmetric denoiser")
    if rho <= 0:
        raise ConfigError("rho must be positive")
    inst = instance or DenseInstance(denoiser, fm)
    condition = inst.condition_holds()
    norm = spectral_norm_dense(inst.dense_R(rho))
    norm_lt_one = norm < 1.0 - NORM_ONE_TOL
    # The proof splits off the subspace (N(I-W) + N(W)) whose image under
    # 2W - I can fall in N(A); flag whether that subcase is non-vacuous here.
    fixed_plus_kernel = np.hstack([inst.null_ImW(), inst.null_W()])
    if fixed_plus_kernel.shape[1]:
        subcase = subspace_intersection_dim(fixed_plus_kernel, inst.null_A()) > 0
    else:
        subcase = False
    return TheoremVerdict(
        theorem_id="theorem2",
        instance_id=instance_id,
        condition_holds=condition,
        norm_value=norm,
        norm_kind="euclid",
        norm_lt_one=norm_lt_one,
        agree=condition == norm_lt_one,
        margin=abs(1.0 - norm),
        note="subcase_nonvacuous" if subcase else "",
    )


@dataclass(frozen=True)
class KernelInpaintingNorms:
    """Both norms of both PnP maps for one kernel-denoiser inpainting instance."""

    p_norm_D: float
    p_norm_euclid: float
    r_norm_D: Optional[float]
    r_norm_euclid: Optional[float]
    j_norm_D: Optional[float]


def kernel_inpainting_norms(denoiser: KernelDenoiser, fm: Inpainting, gamma: float,
                            rho: Optional[float]) -> KernelInpaintingNorms:
    """Dense norms via the diagonal-similarity identities.

    For inpainting A is 0/1 diagonal, so D^(1/2) P D^(-1/2) = W0 G with
    G = I - gamma AᵀA diagonal, and D^(1/2) R D^(-1/2) = (I + F(2 W0 - I))/2
    with F diagonal; both follow because diagonal matrices commute.
    """
    check_dense(fm.n, "kernel_inpainting_norms")
    n = fm.n
    obs = fm.mask.observed
    g = np.where(obs, 1.0 - gamma, 1.0)
    W0 = denoiser.dense_W0()
    W = denoiser.dense_W()
    p_D = spectral_norm_dense(W0 * g[None, :])
    p_E = spectral_norm_dense(W * g[None, :])
    r_D = r_E = j_D = None
    if rho is not None:
        f = np.where(obs, (1.0 - rho) / (1.0 + rho), 1.0)
        J0 = f[:, None] * (2.0 * W0 - np.eye(n))
        j_D = spectral_norm_dense(J0)
        r_D = spectral_norm_dense(0.5 * (np.eye(n) + J0))
        r_E = spectral_norm_dense(0.5 * (np.eye(n) + f[:, None] * (2.0 * W - np.eye(n))))
    return KernelInpaintingNorms(p_norm_D=p_D, p_norm_euclid=p_E,
                                 r_norm_D=r_D, r_norm_euclid=r_E, j_norm_D=j_D)


def check_theorem3(denoiser: KernelDenoiser, fm: Inpainting, gamma: float,
                   rho: Optional[float] = None,
                   cert: Optional[SpectralCertificate] = None,
                   instance_id: str = "") -> list[TheoremVerdict]:
    """Kernel denoiser on inpainting: D-norm contractivity of P (and R).

    These are one-directional claims: the verdict agrees unless the
    hypotheses hold and the norm fails to be < 1.  The ADMM half needs a
    nonsingular W; singular instances are skipped with an explicit note.
    """
    if denoiser.kind != "row_normalized":
        raise ConfigError("check_theorem3 needs a row-normalized kernel denoiser")
    if not isinstance(fm, Inpainting):
        raise ConfigError("check_theorem3 is an inpainting-only result")
    if not fm.mask.observed.any():
        raise ConfigError("check_theorem3 requires a nonempty mask")
    cert = cert or spectral_certificate(denoiser)
    if not (cert.psd and cert.eig1_simple):
        raise ConfigError(f"kernel denoiser violates its hypotheses: {cert.summary()}")
    hyp_ista = 0.0 < gamma < 2.0
    norms = kernel_inpainting_norms(denoiser, fm, gamma, rho)
    out = [
        TheoremVerdict(
            theorem_id="theorem3_ista",
            instance_id=instance_id,
            condition_holds=hyp_ista,
            norm_value=norms.p_norm_D,
            norm_kind="D",
            norm_lt_one=norms.p_norm_D < 1.0 - NORM_ONE_TOL,
            agree=(not hyp_ista) or norms.p_norm_D < 1.0 - NORM_ONE_TOL,
            margin=abs(1.0 - norms.p_norm_D),
            note=f"p_norm_euclid={norms.p_norm_euclid:.9f}",
        )
    ]
    if rho is not None:
        if not cert.nonsingular:
            out.append(
                TheoremVerdict(
                    theorem_id="theorem3_admm",
                    instance_id=instance_id,
                    condition_holds=False,
                    norm_value=float("nan"),
                    norm_kind="D",
                    norm_lt_one=False,
                    agree=True,
                    margin=float("nan"),
                    note="skipped: W singular (hypothesis requires nonsingular W)",
                )
            )
        else:
            hyp_admm = rho > 0
            out.append(
                TheoremVerdict(
                    theorem_id="theorem3_admm",
                    instance_id=instance_id,
                    condition_holds=hyp_admm,
                    norm_value=norms.r_norm_D,
                    norm_kind="D",
                    norm_lt_one=norms.r_norm_D < 1.0 - NORM_ONE_TOL,
                    agree=(not hyp_admm) or norms.r_norm_D < 1.0 - NORM_ONE_TOL,
                    margin=abs(1.0 - norms.r_norm_D),
                    note=f"r_norm_euclid={norms.r_norm_euclid:.9f};j_norm_D={norms.j_norm_D:.9f}",
                )
            )
    return out


# ---------------------------------------------------------------------------
# campaign grids (shared by the verify CLI and the acceptance suite)
# ---------------------------------------------------------------------------

THEOREM_TASKS = ("inpaint30", "inpaint1", "deblur", "superres")
THEOREM_GAMMAS = (0.25, 0.5, 1.0, 1.5, 1.9)
THEOREM_RHOS = (0.1, 1.0, 10.0)
THEOREM3_GAMMAS = (0.25, 0.5, 0.75, 1.0, 1.5, 1.9)
_TASK_SEED_OFFSET = {"inpaint30": 1, "inpaint1": 2, "deblur": 3, "superres": 4}


def _task_fm(task: str, shape, seed: int) -> ForwardModel:
    if task == "inpaint30":
        return make_forward_model("inpaint", shape, sample_fraction=0.3, seed=seed)
    if task == "inpaint1":
        return make_forward_model("inpaint", shape, sample_fraction=0.01, seed=seed)
    if task == "deblur":
        return make_forward_model("deblur", shape, blur_size=11)
    if task == "superres":
        return make_forward_model("superres", shape, blur_size=11, sr_factor=2)
    raise ConfigError(f"unknown theorem task {task!r}")


def certified_dsg_nlm(size: int, seed: int):
    """DSG-NLM on a synthetic texture plus its certificate (must be simple-1)."""
    guide = synthetic_texture(size, size, seed=seed)
    den = symmetrize_sinkhorn(build_nlm(guide))
    cert = spectral_certificate(den)
    return den, cert


def certified_nlm(size: int, seed: int):
    guide = synthetic_texture(size, size, seed=seed)
    den = build_nlm(guide)
    cert = spectral_certificate(den)
    return den, cert


def theorem1_campaign(sizes=(16, 32), gammas=THEOREM_GAMMAS, seed: int = 0,
                      include_negative: bool = True) -> list[TheoremVerdict]:
    verdicts = []
    for size in sizes:
        den, cert = certified_dsg_nlm(size, seed=seed + size)
        if not cert.eig1_simple:
            raise ConfigError(f"denoiser not certified at size {size}: {cert.summary()}")
        for task in THEOREM_TASKS:
            fm = _task_fm(task, (size, size), seed=seed + size + _TASK_SEED_OFFSET[task])
            inst = DenseInstance(den, fm)
            for gamma in gammas:
                verdicts.append(
                    check_theorem1(den, fm, gamma, instance=inst,
                                   instance_id=f"{size}x{size}/{task}/gamma={gamma}")
                )
        if include_negative:
            fm0 = Inpainting((size, size), InpaintMask(np.zeros(size * size, dtype=bool)),
                             allow_empty=True)
            verdicts.append(
                check_theorem1(den, fm0, 1.0, instance_id=f"{size}x{size}/empty_mask/gamma=1.0")
            )
    return verdicts


def theorem2_campaign(sizes=(16, 32), rhos=THEOREM_RHOS, seed: int = 0,
                      include_negative: bool = True) -> list[TheoremVerdict]:
    verdicts = []
    for size in sizes:
        den, cert = certified_dsg_nlm(size, seed=seed + size)
        if not cert.eig1_simple:
            raise ConfigError(f"denoiser not certified at size {size}: {cert.summary()}")
        for task in THEOREM_TASKS:
            fm = _task_fm(task, (size, size), seed=seed + size + _TASK_SEED_OFFSET[task])
            inst = DenseInstance(den, fm)
            for rho in rhos:
                verdicts.append(
                    check_theorem2(den, fm, rho, instance=inst,
                                   instance_id=f"{size}x{size}/{task}/rho={rho}")
                )
        if include_negative:
            n = size * size
            identity_ds = symmetrize_sinkhorn(from_dense_kernel(np.eye(n), shape=(size, size)))
            fm = _task_fm("inpaint30", (size, size), seed=seed + size + 17)
            verdicts.append(
                check_theorem2(identity_ds, fm, 1.0,
                               instance_id=f"{size}x{size}/identity_W/rho=1.0")
            )
    return verdicts


def theorem3_campaign(sizes=(16, 32), gammas=THEOREM3_GAMMAS, rhos=THEOREM_RHOS,
                      fractions=(0.3, 0.01), seed: int = 0) -> list[TheoremVerdict]:
    verdicts = []
    for size in sizes:
        den, cert = certified_nlm(size, seed=seed + size)
        if not (cert.psd and cert.eig1_simple and cert.nonsingular):
            raise ConfigError(f"NLM not certified at size {size}: {cert.summary()}")
        for frac in fractions:
            fm = make_forward_model("inpaint", (size, size), sample_fraction=frac,
                                    seed=seed + size + int(frac * 1000))
            tag = f"{size}x{size}/inpaint{frac:g}"
            for gamma in gammas:
                verdicts.extend(
                    check_theorem3(den, fm, gamma, rho=None, cert=cert,
                                   instance_id=f"{tag}/gamma={gamma}")
                )
            for rho in rhos:
                verdicts.extend(
                    v for v in check_theorem3(den, fm, 1.0, rho=rho, cert=cert,
                                              instance_id=f"{tag}/rho={rho}")
                    if v.theorem_id == "theorem3_admm"
                )
    return verdicts


def table1_phenomenon(size: int = 32, fraction: float = 0.001,
                      gammas=(0.25, 0.5, 0.75), seed: int = 0):
    """Very sparse inpainting with plain NLM: hunt for ||P||_2 > 1 > ||P||_D."""
    den, cert = certified_nlm(size, seed=seed + size)
    n = size * size
    fm = make_forward_model("inpaint", (size, size),
                            sample_fraction=max(fraction, 1.0 / n), seed=seed + 101)
    rows = []
    for gamma in gammas:
        norms = kernel_inpainting_norms(den, fm, gamma, rho=1.0)
        rows.append(
            {
                "gamma": gamma,
                "p_norm_euclid": norms.p_norm_euclid,
                "p_norm_D": norms.p_norm_D,
                "r_norm_euclid": norms.r_norm_euclid,
                "r_norm_D": norms.r_norm_D,
            }
        )
    return rows, cert
