"""Gaussian (Mehler) representation of the finite-dimensional semigroup and resolvent.

The generator is L v = 1/2 Tr[Q_n D^2 v] + <xi, B_n grad v>, so the
associated linear SDE has drift matrix M = B_n^T and

    T(t) phi(xi) = E[phi(e^{tM} xi + Z)],  Z ~ N(0, Sigma_t),
    Sigma_t = int_0^t e^{sM} Q_n e^{sM^T} ds.
"""

from __future__ import annotations

import math

import numpy as np
from scipy.linalg import expm, solve_continuous_lyapunov

from .functions import CosineSum, CylinderFunction
from .galerkin import GalerkinPair
from .quadrature import QuadratureSpec, inner_rule, laplace_rule


def psd_sqrt(S: np.ndarray) -> np.ndarray:
    """L with L L^T = S for a symmetric PSD S (negative rounding clipped)."""
    d, U = np.linalg.eigh(0.5 * (S + S.T))
    return U * np.sqrt(np.clip(d, 0.0, None))


class MehlerKernel:
    """Propagators e^{tM} and covariances Sigma_t of a Galerkin pair, cached by t.

    Sigma_t is obtained exactly: a Van Loan block exponential on a short base
    step h = t / 2^k, then k doubling steps
    Sigma_{2s} = Sigma_s + e^{sM} Sigma_s e^{sM^T}.
    """

    def __init__(self, pair: GalerkinPair):
        self.pair = pair
        self.n = pair.n
        self.drift_matrix = np.array(pair.b_mat.T)
        self.diffusion = np.array(pair.q_mat)
        self.rate = float(np.linalg.norm(self.drift_matrix, 2) + np.linalg.norm(self.diffusion, 2))
        self._cache: dict[float, tuple[np.ndarray, np.ndarray]] = {}

    def propagate(self, t: float) -> tuple[np.ndarray, np.ndarray]:
        t = float(t)
        hit = self._cache.get(t)
        if hit is not None:
            return hit
        n, M, S = self.n, self.drift_matrix, self.diffusion
        if t == 0.0:
            out = (np.eye(n), np.zeros((n, n)))
        else:
            k = max(0, math.ceil(math.log2(max(t * (self.rate + 1e-300) / 0.25, 1.0))))
            h = t / 2**k
            block = np.zeros((2 * n, 2 * n))
            block[:n, :n] = -M
            block[:n, n:] = S
            block[n:, n:] = M.T
            V = expm(h * block)
            E_T = V[n:, n:]
            sigma = E_T.T @ V[:n, n:]
            E = E_T.T
            for _ in range(k):
                sigma = sigma + E @ sigma @ E.T
                E = E @ E
            out = (E, 0.5 * (sigma + sigma.T))
        self._cache[t] = out
        return out

    def expm(self, t: float) -> np.ndarray:
        return self.propagate(t)[0]

    def sigma(self, t: float) -> np.ndarray:
        return self.propagate(t)[1]

    def sigma_inf(self) -> np.ndarray:
        """Stationary covariance; requires a Hurwitz drift matrix."""
        M = self.drift_matrix
        if np.max(np.linalg.eigvals(M).real) >= -1e-12:
            raise ValueError("drift matrix is not Hurwitz; no stationary covariance")
        S = solve_continuous_lyapunov(M, -self.diffusion)
        return 0.5 * (S + S.T)


def _as_points(xi, n: int):
    xi = np.asarray(xi, dtype=float)
    single = xi.ndim == 1
    xi = np.atleast_2d(xi)
    if xi.shape[1] != n:
        raise ValueError(f"points must have {n} coordinates, got {xi.shape[1]}")
    return xi, single


def _smoothed_k(phi: CylinderFunction, mean, cov, quad: QuadratureSpec | None, method: str, derivs: bool):
    """E[phi(mean + Z)] (and its derivatives in mean) on the first k coordinates."""
    if method not in ("auto", "analytic", "quadrature"):
        raise ValueError(f"unknown method {method!r}")
    if phi.closed_form and method != "quadrature":
        return phi.smoothed(mean, cov)
    if method == "analytic":
        raise NotImplementedError(f"{type(phi).__name__} has no closed form")
    quad = quad or QuadratureSpec()
    k = phi.arity
    eta, w = inner_rule(quad, k)
    Z = eta @ psd_sqrt(cov).T
    P = mean.shape[0]
    pts = (mean[:, None, :] + Z[None, :, :]).reshape(-1, k)
    val = (phi._value(pts).reshape(P, -1)) @ w
    if not derivs:
        return val, None, None
    grad = np.einsum("pqi,q->pi", phi._grad(pts).reshape(P, -1, k), w)
    hess = np.einsum("pqij,q->pij", phi._hess(pts).reshape(P, -1, k, k), w)
    return val, grad, hess


def semigroup_apply(kernel: MehlerKernel, t: float, phi: CylinderFunction, xi, quad: QuadratureSpec | None = None, method: str = "auto"):
    """T(t) phi at the points xi (shape (P, n) or (n,))."""
    if t < 0:
        raise ValueError("t must be nonnegative")
    pts, single = _as_points(xi, kernel.n)
    if t == 0:
        out = phi.value(pts)
    else:
        E, S = kernel.propagate(t)
        k = phi.arity
        mean = pts @ E[:k, :].T
        out = _smoothed_k(phi, mean, S[:k, :k], quad, method, derivs=False)[0]
    return out[0] if single else out


def semigroup_derivatives(kernel: MehlerKernel, t: float, phi: CylinderFunction, xi, quad=None, method: str = "auto"):
    """Value, gradient and Hessian of T(t) phi at points xi of shape (P, n)."""
    pts, _ = _as_points(xi, kernel.n)
    if t == 0:
        return phi.evaluate(pts)
    E, S = kernel.propagate(t)
    k = phi.arity
    Ek = E[:k, :]
    g, dg, d2g = _smoothed_k(phi, pts @ Ek.T, S[:k, :k], quad, method, derivs=True)
    return g, dg @ Ek, np.einsum("ai,pab,bj->pij", Ek, d2g, Ek)


def _profile_scale(phi: CylinderFunction) -> float:
    if isinstance(phi, CosineSum):
        return 1.0 + float(np.max(np.sum(phi.freqs**2, axis=1)))
    width = getattr(getattr(phi, "bump", phi), "width", None)
    return 1.0 + (1.0 / width**2 if width else 0.0)


class Resolvent:
    """V = R(lam) phi = int_0^inf e^{-lam t} T(t) phi dt with its derivatives.

    Cosine sums take a closed-form route: each Laplace node contributes a
    damped cosine, so V is itself (numerically) a cosine sum over n
    coordinates. Other profiles integrate the smoothed derivatives node by node.
    """

    def __init__(self, kernel: MehlerKernel, lam: float, phi: CylinderFunction, quad: QuadratureSpec | None = None, method: str = "auto"):
        if lam <= 0:
            raise ValueError("lambda must be positive")
        self.kernel = kernel
        self.lam = float(lam)
        self.phi = phi
        self.quad = quad or QuadratureSpec()
        self.method = method
        self.t, self.w = laplace_rule(self.lam, kernel.rate * _profile_scale(phi), self.quad.laplace_nodes)
        self._cosine = None
        if isinstance(phi, CosineSum) and method != "quadrature":
            self._cosine = self._build_cosine_sum()

    def _build_cosine_sum(self) -> CosineSum:
        phi, k = self.phi, self.phi.arity
        amps, freqs, phases = [], [], []
        for t, w in zip(self.t, self.w):
            E, S = self.kernel.propagate(t)
            damp = np.exp(-0.5 * np.einsum("ji,ik,jk->j", phi.freqs, S[:k, :k], phi.freqs))
            amps.append(w * phi.amplitudes * damp)
            freqs.append(phi.freqs @ E[:k, :])
            phases.append(phi.phases)
        return CosineSum(np.concatenate(amps), np.vstack(freqs), np.concatenate(phases))

    def as_cosine_sum(self) -> CosineSum:
        if self._cosine is None:
            raise TypeError("closed-form representation only exists for cosine profiles")
        return self._cosine

    def evaluate(self, xi):
        """(value, gradient, Hessian) at points of shape (P, n)."""
        pts, single = _as_points(xi, self.kernel.n)
        if self._cosine is not None:
            out = self._cosine.evaluate(pts)
        else:
            n, P = self.kernel.n, pts.shape[0]
            v, g, H = np.zeros(P), np.zeros((P, n)), np.zeros((P, n, n))
            for t, w in zip(self.t, self.w):
                a, b, c = semigroup_derivatives(self.kernel, t, self.phi, pts, self.quad, self.method)
                v += w * a
                g += w * b
                H += w * c
            out = (v, g, H)
        if single:
            return tuple(o[0] for o in out)
        return out

    def value(self, xi):
        pts, single = _as_points(xi, self.kernel.n)
        if self._cosine is not None:
            out = self._cosine.value(pts)
        else:
            out = np.zeros(pts.shape[0])
            for t, w in zip(self.t, self.w):
                out += w * semigroup_apply(self.kernel, t, self.phi, pts, self.quad, self.method)
        return out[0] if single else out

    def grad(self, xi):
        return self.evaluate(xi)[1]

    def hess(self, xi):
        return self.evaluate(xi)[2]


def resolvent_apply(kernel, lam, phi, xi, quad=None, method="auto"):
    return Resolvent(kernel, lam, phi, quad, method).value(xi)


def resolvent_gradient(kernel, lam, phi, xi, quad=None, method="auto"):
    return Resolvent(kernel, lam, phi, quad, method).grad(xi)


def resolvent_hessian(kernel, lam, phi, xi, quad=None, method="auto"):
    return Resolvent(kernel, lam, phi, quad, method).hess(xi)


def generator_apply(pair: GalerkinPair, xi, grad, hess) -> np.ndarray:
    """L v = 1/2 Tr[Q_n D^2 v] + <xi, B_n grad v> from sampled derivatives."""
    xi = np.atleast_2d(xi)
    grad = np.atleast_2d(grad)
    hess = hess if np.ndim(hess) == 3 else np.asarray(hess)[None]
    diffusion = 0.5 * np.einsum("ij,pji->p", pair.q_mat, hess)
    drift = np.einsum("pi,ij,pj->p", xi, pair.b_mat, grad)
    return diffusion + drift


def pde_residual(kernel: MehlerKernel, lam: float, phi: CylinderFunction, xi, triple) -> float:
    """max over points of |lam v - L v - phi| for v given as (value, gradient, Hessian)."""
    v, g, H = triple
    pts = np.atleast_2d(xi)
    r = lam * np.atleast_1d(v) - generator_apply(kernel.pair, pts, g, H) - phi.value(pts)
    return float(np.max(np.abs(r)))
