"""Cylinder test functions: smooth bounded profiles of the first k frame coordinates.

Every profile evaluates on points ``xi`` of shape (P, n) with n >= k and
returns values (P,), gradients (P, n) and Hessians (P, n, n), zero-padded
beyond the first k coordinates. A single point of shape (n,) is accepted too.

Profiles with a closed-form Gaussian smoothing implement ``smoothed``, which
returns E[phi(m + Z)], its gradient and Hessian in m, for Z ~ N(0, cov).
"""

from __future__ import annotations

import numpy as np


class CylinderFunction:
    arity: int = 1
    closed_form = False

    def _value(self, x):
        raise NotImplementedError

    def _grad(self, x):
        raise NotImplementedError

    def _hess(self, x):
        raise NotImplementedError

    def smoothed(self, mean, cov):
        raise NotImplementedError(f"{type(self).__name__} has no closed-form Gaussian smoothing")

    def to_dict(self) -> dict:
        raise NotImplementedError

    def _split(self, xi):
        xi = np.asarray(xi, dtype=float)
        single = xi.ndim == 1
        xi = np.atleast_2d(xi)
        if xi.shape[1] < self.arity:
            raise ValueError(f"profile of arity {self.arity} needs at least {self.arity} coordinates")
        return xi, single

    def value(self, xi):
        xi, single = self._split(xi)
        out = self._value(xi[:, : self.arity])
        return out[0] if single else out

    def grad(self, xi):
        xi, single = self._split(xi)
        out = np.zeros(xi.shape)
        out[:, : self.arity] = self._grad(xi[:, : self.arity])
        return out[0] if single else out

    def hess(self, xi):
        xi, single = self._split(xi)
        n, k = xi.shape[1], self.arity
        out = np.zeros((xi.shape[0], n, n))
        out[:, :k, :k] = self._hess(xi[:, :k])
        return out[0] if single else out

    def evaluate(self, xi):
        return self.value(xi), self.grad(xi), self.hess(xi)

    def sup_norm(self) -> float | None:
        return None


class CosineSum(CylinderFunction):
    """sum_j c_j cos(a_j . x + b_j)."""

    closed_form = True

    def __init__(self, amplitudes, freqs, phases):
        self.amplitudes = np.atleast_1d(np.asarray(amplitudes, dtype=float))
        self.freqs = np.atleast_2d(np.asarray(freqs, dtype=float))
        self.phases = np.atleast_1d(np.asarray(phases, dtype=float))
        J = self.amplitudes.size
        if self.freqs.shape[0] != J or self.phases.size != J:
            raise ValueError("amplitudes, freqs and phases must have matching lengths")
        self.arity = self.freqs.shape[1]

    def _arg(self, x):
        return x @ self.freqs.T + self.phases

    def _value(self, x):
        return np.cos(self._arg(x)) @ self.amplitudes

    def _grad(self, x):
        return -(np.sin(self._arg(x)) * self.amplitudes) @ self.freqs

    def _hess(self, x):
        J, k = self.freqs.shape
        outer = np.einsum("ji,jk->jik", self.freqs, self.freqs).reshape(J, k * k)
        return -((np.cos(self._arg(x)) * self.amplitudes) @ outer).reshape(-1, k, k)

    def smoothed(self, mean, cov):
        damp = np.exp(-0.5 * np.einsum("ji,ik,jk->j", self.freqs, cov, self.freqs))
        scaled = CosineSum(self.amplitudes * damp, self.freqs, self.phases)
        return scaled._value(mean), scaled._grad(mean), scaled._hess(mean)

    def sup_norm(self) -> float:
        return float(np.sum(np.abs(self.amplitudes)))

    def to_dict(self) -> dict:
        return {
            "cosine_sum": {
                "amplitudes": self.amplitudes.tolist(),
                "freqs": self.freqs.tolist(),
                "phases": self.phases.tolist(),
            }
        }


class Cosine(CosineSum):
    """cos(a . x + b)."""

    def __init__(self, a, b: float = 0.0):
        a = np.atleast_1d(np.asarray(a, dtype=float))
        super().__init__([1.0], a[None, :], [float(b)])

    def to_dict(self) -> dict:
        return {"cosine": {"a": self.freqs[0].tolist(), "b": float(self.phases[0])}}


class Constant(CosineSum):
    def __init__(self, c: float = 1.0, arity: int = 1):
        super().__init__([float(c)], np.zeros((1, arity)), [0.0])

    def to_dict(self) -> dict:
        return {"constant": {"c": float(self.amplitudes[0]), "arity": self.arity}}


class GaussianBump(CylinderFunction):
    """exp(-|x - center|^2 / (2 width^2))."""

    closed_form = True

    def __init__(self, center, width: float = 1.0):
        self.center = np.atleast_1d(np.asarray(center, dtype=float))
        self.width = float(width)
        if self.width <= 0:
            raise ValueError("width must be positive")
        self.arity = self.center.size

    def _value(self, x):
        d = x - self.center
        return np.exp(-0.5 * np.sum(d * d, axis=1) / self.width**2)

    def _grad(self, x):
        return -self._value(x)[:, None] * (x - self.center) / self.width**2

    def _hess(self, x):
        d = x - self.center
        w2 = self.width**2
        v = self._value(x)
        return v[:, None, None] * (np.einsum("pi,pj->pij", d, d) / w2**2 - np.eye(self.arity) / w2)

    def smoothed(self, mean, cov):
        k = self.arity
        S = self.width**2 * np.eye(k) + cov
        P = np.linalg.inv(S)
        P = 0.5 * (P + P.T)
        scale = self.width**k / np.sqrt(np.linalg.det(S))
        d = mean - self.center
        Pd = d @ P
        g = scale * np.exp(-0.5 * np.sum(Pd * d, axis=1))
        grad = -g[:, None] * Pd
        hess = g[:, None, None] * (np.einsum("pi,pj->pij", Pd, Pd) - P)
        return g, grad, hess

    def sup_norm(self) -> float:
        return 1.0

    def to_dict(self) -> dict:
        return {"gaussian": {"center": self.center.tolist(), "width": self.width}}


class PolyBump(CylinderFunction):
    """prod_i p_i(x_i) times a Gaussian bump; p_i given by ascending coefficients."""

    def __init__(self, coeffs, center=None, width: float = 1.0):
        self.polys = [np.polynomial.Polynomial(np.asarray(c, dtype=float)) for c in coeffs]
        self.arity = len(self.polys)
        self.bump = GaussianBump(np.zeros(self.arity) if center is None else center, width)
        if self.bump.arity != self.arity:
            raise ValueError("center length must match the number of polynomials")

    def _factors(self, x):
        P = np.column_stack([p(x[:, i]) for i, p in enumerate(self.polys)])
        D = np.column_stack([p.deriv(1)(x[:, i]) for i, p in enumerate(self.polys)])
        DD = np.column_stack([p.deriv(2)(x[:, i]) for i, p in enumerate(self.polys)])
        return P, D, DD

    def _poly_parts(self, x):
        P, D, DD = self._factors(x)
        k = self.arity
        u = np.prod(P, axis=1)
        du = np.empty_like(P)
        d2u = np.empty((x.shape[0], k, k))
        for i in range(k):
            rest_i = np.prod(np.delete(P, i, axis=1), axis=1)
            du[:, i] = D[:, i] * rest_i
            d2u[:, i, i] = DD[:, i] * rest_i
            for j in range(i + 1, k):
                rest_ij = np.prod(np.delete(P, [i, j], axis=1), axis=1)
                d2u[:, i, j] = d2u[:, j, i] = D[:, i] * D[:, j] * rest_ij
        return u, du, d2u

    def _value(self, x):
        return np.prod(self._factors(x)[0], axis=1) * self.bump._value(x)

    def _grad(self, x):
        u, du, _ = self._poly_parts(x)
        b = self.bump._value(x)
        return b[:, None] * du + u[:, None] * self.bump._grad(x)

    def _hess(self, x):
        u, du, d2u = self._poly_parts(x)
        b, db, d2b = self.bump._value(x), self.bump._grad(x), self.bump._hess(x)
        cross = np.einsum("pi,pj->pij", du, db)
        return b[:, None, None] * d2u + cross + cross.transpose(0, 2, 1) + u[:, None, None] * d2b

    def to_dict(self) -> dict:
        return {
            "polybump": {
                "coeffs": [p.coef.tolist() for p in self.polys],
                "center": self.bump.center.tolist(),
                "width": self.bump.width,
            }
        }


def profile_from_dict(cfg: dict) -> CylinderFunction:
    """Build a profile from its inline JSON form, e.g. {"cosine": {"a": [1, 0.5], "b": 0}}."""
    if not isinstance(cfg, dict) or len(cfg) != 1:
        raise ValueError("profile config must be a single-key object")
    kind, body = next(iter(cfg.items()))
    if kind == "cosine":
        return Cosine(body["a"], body.get("b", 0.0))
    if kind == "gaussian":
        return GaussianBump(body["center"], body.get("width", 1.0))
    if kind == "constant":
        if isinstance(body, dict):
            return Constant(body.get("c", 1.0), body.get("arity", 1))
        return Constant(float(body))
    if kind == "polybump":
        return PolyBump(body["coeffs"], body.get("center"), body.get("width", 1.0))
    if kind == "cosine_sum":
        return CosineSum(body["amplitudes"], body["freqs"], body["phases"])
    raise ValueError(f"unknown profile kind {kind!r}")
