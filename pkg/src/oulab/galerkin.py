"""Galerkin matrices of the truncated operator and the structural hypothesis checks."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import eigh

from .basis import ThetaBasis
from .model import SpectralModel

PD_TOL = 1e-12
RANGE_TOL = 1e-10


class HypothesisError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class GalerkinPair:
    """Diffusion Gram matrix ``q_mat`` and drift pairing ``b_mat`` on an n-frame.

    ``b_mat[k, j] = <Q_inf A^T f*_j, f*_k>``. With regularization eps the pair
    corresponds to the diffusion Q + eps Q_inf and drift A - (eps/2) I, which
    share the same Q_inf, so ``b_mat + b_mat.T == -q_mat`` for every eps.
    """

    n: int
    q_mat: np.ndarray
    b_mat: np.ndarray
    epsilon: float = 0.0

    @property
    def skew(self) -> np.ndarray:
        return self.b_mat - self.b_mat.T


@dataclass
class HypothesisReport:
    n: int
    epsilon: float
    c_rkhs: float | None
    nu_min: float | str
    nu_formula: float | None = None
    dissipation_residual: float = 0.0
    details: dict = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return self.c_rkhs is not None and isinstance(self.nu_min, float) and self.nu_min < 1.0

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "epsilon": self.epsilon,
            "c_rkhs": self.c_rkhs,
            "nu_min": self.nu_min,
            "nu_formula": self.nu_formula,
            "dissipation_residual": self.dissipation_residual,
            "details": self.details,
        }


def build_pair(model: SpectralModel, q_inf: np.ndarray, basis: ThetaBasis, n: int, epsilon: float = 0.0) -> GalerkinPair:
    if not 1 <= n <= basis.width:
        raise ValueError(f"n={n} exceeds basis width {basis.width}")
    if basis.frame.shape[0] != model.dim or np.shape(q_inf) != (model.dim, model.dim):
        raise ValueError("dimension mismatch between model, q_inf and basis")
    if epsilon < 0:
        raise ValueError("epsilon must be nonnegative")
    F = basis.frame[:, :n]
    q_inf = np.asarray(q_inf, dtype=float)
    gram_inf = F.T @ q_inf @ F
    q_mat = F.T @ model.diffusion @ F + epsilon * gram_inf
    b_mat = F.T @ q_inf @ model.drift.T @ F - 0.5 * epsilon * gram_inf
    q_mat = 0.5 * (q_mat + q_mat.T)
    return GalerkinPair(n=n, q_mat=q_mat, b_mat=b_mat, epsilon=float(epsilon))


def check_dissipation(pair: GalerkinPair, factor: float = 1.0) -> float:
    """||B + B^T + factor * Q||_F; factor 1 is the Lyapunov-consistent identity."""
    return float(np.linalg.norm(pair.b_mat + pair.b_mat.T + factor * pair.q_mat, "fro"))


def sym_basis(n: int) -> np.ndarray:
    """Frobenius-orthonormal basis of symmetric n x n matrices, shape (n(n+1)/2, n, n)."""
    mats = []
    s = 1.0 / np.sqrt(2.0)
    for i in range(n):
        for j in range(i, n):
            E = np.zeros((n, n))
            if i == j:
                E[i, i] = 1.0
            else:
                E[i, j] = E[j, i] = s
            mats.append(E)
    return np.array(mats)


def trace_form(X: np.ndarray, basis: np.ndarray) -> np.ndarray:
    """Matrix of C -> Tr[XCXC] in the half-vectorized coordinates of ``basis``."""
    XE = np.einsum("ij,ajk->aik", X, basis)
    G = np.einsum("aij,bji->ab", XE, XE)
    return 0.5 * (G + G.T)


def nu_min(pair: GalerkinPair) -> float:
    """Smallest nu >= 0 with Tr[KCKC] >= -nu Tr[QCQC] for all symmetric C, K = B - B^T."""
    return nu_min_details(pair)["nu_min"]


def nu_min_details(pair: GalerkinPair) -> dict:
    q = pair.q_mat
    eigs = np.linalg.eigvalsh(q)
    if eigs[0] <= PD_TOL * max(1.0, abs(eigs[-1])):
        raise HypothesisError(f"Q not positive definite: min eigenvalue of q_mat = {eigs[0]:.3e}")
    basis = sym_basis(pair.n)
    G = trace_form(q, basis)
    K = trace_form(pair.skew, basis)
    vals = eigh(-K, G, eigvals_only=True)
    top = float(vals[-1])
    return {
        "nu_min": max(top, 0.0) + 0.0,
        "pencil_top": top + 0.0,
        "pencil_bottom": float(vals[0]),
        "q_min_eig": float(eigs[0]),
        "q_max_eig": float(eigs[-1]),
    }


def regularized_matrices(model: SpectralModel, q_inf: np.ndarray, epsilon: float) -> tuple[np.ndarray, np.ndarray]:
    """Drift A - (eps/2) I and diffusion Q + eps Q_inf; both keep Q_inf as stationary covariance."""
    A = model.drift - 0.5 * epsilon * np.eye(model.dim)
    Q = model.diffusion + epsilon * np.asarray(q_inf)
    return A, Q


def rkhs_constant(model: SpectralModel, q_inf: np.ndarray, epsilon: float = 0.0) -> float:
    """Smallest c with |Q_inf A^T x|_H <= c |x|_H, the norms taken in the range of Q."""
    A, Q = regularized_matrices(model, q_inf, epsilon)
    return rkhs_constant_matrices(A, Q, q_inf)


def rkhs_constant_matrices(A: np.ndarray, Q: np.ndarray, q_inf: np.ndarray) -> float:
    T = np.asarray(q_inf) @ A.T
    d, U = np.linalg.eigh(Q)
    scale = max(1.0, float(np.max(np.abs(d))))
    keep = d > RANGE_TOL * scale
    Ur, dr = U[:, keep], d[keep]
    U0 = U[:, ~keep]
    tnorm = max(np.linalg.norm(T, 2), 1e-300)
    if U0.shape[1]:
        escape = np.linalg.norm(U0.T @ T, 2)
        if escape > RANGE_TOL * tnorm:
            raise HypothesisError(f"image escapes H: component outside range(Q) = {escape:.3e}")
    if not keep.any():
        raise HypothesisError("image escapes H: Q is zero")
    W = Ur.T @ T / np.sqrt(dr)[:, None]
    numer = W.T @ W
    if U0.shape[1]:
        leak = np.linalg.norm(numer @ U0, 2)
        if leak > RANGE_TOL * max(np.linalg.norm(numer, 2), 1e-300):
            raise HypothesisError("image escapes H: the bound fails on ker(Q)")
    numer_r = Ur.T @ numer @ Ur
    top = eigh(0.5 * (numer_r + numer_r.T), np.diag(dr), eigvals_only=True)[-1]
    return float(np.sqrt(max(top, 0.0)))


def hypothesis_report(model: SpectralModel, q_inf: np.ndarray, pair: GalerkinPair, nu_formula: float | None = None) -> HypothesisReport:
    details: dict = {}
    try:
        c = rkhs_constant(model, q_inf, pair.epsilon)
    except HypothesisError as exc:
        c = None
        details["c_rkhs_error"] = str(exc)
    try:
        nd = nu_min_details(pair)
        nu: float | str = nd.pop("nu_min")
        details.update(nd)
        if nu >= 1.0:
            details["nu_error"] = f"nu_min = {nu:.6g} is not below 1"
    except HypothesisError as exc:
        nu = "fails"
        details["nu_error"] = str(exc)
    details["dissipation_residual_factor2"] = check_dissipation(pair, factor=2.0)
    return HypothesisReport(
        n=pair.n,
        epsilon=pair.epsilon,
        c_rkhs=c,
        nu_min=nu,
        nu_formula=nu_formula,
        dissipation_residual=check_dissipation(pair),
        details=details,
    )
