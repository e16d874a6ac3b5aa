"""Covariances Q_t and Q_inf of the Ornstein-Uhlenbeck semigroup."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import expm, solve_continuous_lyapunov

from .model import ModelError, SpectralModel

GL_ORDER = 16
HURWITZ_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class CovariancePack:
    q_inf: np.ndarray
    lyap_residual: float
    method: str


def gauss_legendre(order: int, a: float, b: float) -> tuple[np.ndarray, np.ndarray]:
    x, w = np.polynomial.legendre.leggauss(order)
    half = 0.5 * (b - a)
    return a + half * (x + 1.0), half * w


def covariance_finite(model: SpectralModel, t: float, panels: int = 64) -> np.ndarray:
    """Composite Gauss-Legendre approximation of int_0^t e^{sA} Q e^{sA^T} ds.

    All panels have equal width h, so the in-panel exponentials are computed
    once and each panel start is advanced by a single product with e^{hA}.
    """
    if t <= 0:
        raise ValueError("t must be positive")
    if panels < 1:
        raise ValueError("panels must be >= 1")
    A, Q = model.drift, model.diffusion
    h = t / panels
    nodes, weights = gauss_legendre(GL_ORDER, 0.0, h)
    local = [expm(s * A) for s in nodes]
    step = expm(h * A)

    panel_sum = np.zeros_like(Q)
    for Es, w in zip(local, weights):
        panel_sum += w * (Es @ Q @ Es.T)

    total = np.zeros_like(Q)
    start = np.eye(model.dim)
    for _ in range(panels):
        total += start @ panel_sum @ start.T
        start = start @ step
    return 0.5 * (total + total.T)


def lyapunov_residual(model: SpectralModel, q_inf: np.ndarray) -> float:
    A, Q = model.drift, model.diffusion
    q_inf = np.asarray(q_inf, dtype=float)
    if q_inf.shape != A.shape:
        raise ValueError(f"shape mismatch: q_inf {q_inf.shape} vs drift {A.shape}")
    return float(np.linalg.norm(q_inf @ A.T + A @ q_inf + Q, "fro"))


def covariance_infinity(model: SpectralModel) -> CovariancePack:
    """Solve A Q_inf + Q_inf A^T = -Q with the Bartels-Stewart (Schur) method."""
    A = model.drift
    abscissa = float(np.max(np.linalg.eigvals(A).real))
    if abscissa >= -HURWITZ_TOL:
        raise ModelError(f"drift not Hurwitz: spectral abscissa = {abscissa:.6e}")
    q_inf = solve_continuous_lyapunov(A, -model.diffusion)
    q_inf = 0.5 * (q_inf + q_inf.T)
    q_inf.setflags(write=False)
    return CovariancePack(q_inf=q_inf, lyap_residual=lyapunov_residual(model, q_inf), method="sylvester")
