"""Quadrature rules: Gaussian expectations, QMC batches and the Laplace transform."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np
from scipy.stats import norm, qmc


class QuadratureError(ValueError):
    pass


@dataclass(frozen=True)
class QuadratureSpec:
    """Quadrature settings.

    gh_order: Gauss-Hermite points per axis for tensor rules.
    qmc_points: total scrambled Sobol points (split into ``batches``).
    seed: master seed for every randomized rule; None forbids QMC.
    laplace_nodes: Gauss-Legendre nodes per panel of the Laplace rule.
    gh_max_dim: largest dimension handled by tensor Gauss-Hermite.
    """

    gh_order: int = 20
    qmc_points: int = 2**16
    seed: int | None = None
    laplace_nodes: int = 16
    gh_max_dim: int = 4
    batches: int = 16

    def __post_init__(self):
        if self.gh_order < 6:
            raise QuadratureError("gh_order must be at least 6")
        if self.laplace_nodes < 2:
            raise QuadratureError("laplace_nodes must be at least 2")
        if self.batches < 2:
            raise QuadratureError("batches must be at least 2")
        per = self.qmc_points // self.batches
        if per * self.batches != self.qmc_points or per < 2 or per & (per - 1):
            raise QuadratureError("qmc_points / batches must be a power of two")

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, cfg: dict) -> "QuadratureSpec":
        known = {k: cfg[k] for k in cls.__dataclass_fields__ if k in cfg}
        unknown = set(cfg) - set(known)
        if unknown:
            raise QuadratureError(f"unknown quadrature fields {sorted(unknown)}")
        return cls(**known)


def gauss_hermite(order: int, dim: int) -> tuple[np.ndarray, np.ndarray]:
    """Tensor Gauss-Hermite nodes and weights for N(0, I_dim)."""
    x, w = np.polynomial.hermite_e.hermegauss(order)
    w = w / math.sqrt(2.0 * math.pi)
    if dim == 0:
        return np.zeros((1, 0)), np.ones(1)
    grids = np.meshgrid(*([x] * dim), indexing="ij")
    wgrids = np.meshgrid(*([w] * dim), indexing="ij")
    pts = np.stack([g.ravel() for g in grids], axis=1)
    wts = np.prod(np.stack([g.ravel() for g in wgrids], axis=1), axis=1)
    return pts, wts


def sobol_normal(dim: int, points: int, seed) -> np.ndarray:
    """Scrambled Sobol points pushed through the normal quantile."""
    m = int(round(math.log2(points)))
    u = qmc.Sobol(d=dim, scramble=True, seed=np.random.default_rng(seed)).random_base2(m)
    return norm.ppf(np.clip(u, 1e-16, 1.0 - 1e-16))


def inner_rule(spec: QuadratureSpec, dim: int) -> tuple[np.ndarray, np.ndarray]:
    """Standard normal rule used inside the semigroup expectation."""
    if dim <= spec.gh_max_dim:
        return gauss_hermite(spec.gh_order, dim)
    if spec.seed is None:
        raise QuadratureError("seed required for quasi-Monte-Carlo quadrature")
    pts = sobol_normal(dim, spec.qmc_points, np.random.SeedSequence(spec.seed))
    return pts, np.full(pts.shape[0], 1.0 / pts.shape[0])


class Estimate:
    """A quadrature estimate with replicate values for error bars.

    ``kind == "pair"``: replicate 0 is the fine rule, replicate 1 a coarser
    embedded rule; the error bar is their difference.
    ``kind == "batch"``: independent randomized batches; the error bar is the
    standard error of the batch mean.
    """

    def __init__(self, reps, kind: str, value=None):
        self.reps = np.asarray(reps, dtype=float)
        self.kind = kind
        if value is None:
            value = self.reps[0] if kind == "pair" else self.reps.mean(axis=0)
        self.value = np.asarray(value, dtype=float)

    @property
    def err(self) -> np.ndarray:
        if self.kind == "pair":
            return np.abs(self.reps[0] - self.reps[1])
        R = self.reps.shape[0]
        return self.reps.std(axis=0, ddof=1) / math.sqrt(R)

    def __getitem__(self, idx) -> "Estimate":
        return Estimate(self.reps[:, idx], self.kind, self.value[idx])

    @staticmethod
    def derive(fn, *ests: "Estimate") -> "Estimate":
        kind = ests[0].kind
        reps = [fn(*[e.reps[r] for e in ests]) for r in range(ests[0].reps.shape[0])]
        return Estimate(reps, kind, fn(*[e.value for e in ests]))


class ExpectationRule:
    """Point sets (with weights) for E over N(0, I_n), one per replicate."""

    kind = "pair"

    def __init__(self, sets):
        self.sets = sets

    @property
    def dim(self) -> int:
        return self.sets[0][0].shape[1]

    def expect(self, fn, chunk: int = 16384) -> Estimate:
        """``fn(points) -> (P, m)`` array of integrands; returns an Estimate of shape (m,)."""
        reps = []
        for pts, wts in self.sets:
            acc = None
            for lo in range(0, pts.shape[0], chunk):
                vals = np.asarray(fn(pts[lo : lo + chunk]), dtype=float)
                vals = vals.reshape(vals.shape[0], -1)
                part = wts[lo : lo + chunk] @ vals
                acc = part if acc is None else acc + part
            reps.append(acc)
        return Estimate(reps, self.kind)


class GaussHermiteRule(ExpectationRule):
    kind = "pair"

    def __init__(self, dim: int, order: int = 20, coarse_order: int | None = None):
        coarse_order = order - 4 if coarse_order is None else coarse_order
        super().__init__([gauss_hermite(order, dim), gauss_hermite(coarse_order, dim)])
        self.order = order


class RQMCRule(ExpectationRule):
    kind = "batch"

    def __init__(self, dim: int, points: int, batches: int, seed: int):
        per = points // batches
        children = np.random.SeedSequence(seed).spawn(batches)
        sets = []
        for child in children:
            pts = sobol_normal(dim, per, child)
            sets.append((pts, np.full(per, 1.0 / per)))
        super().__init__(sets)


def expectation_rule(spec: QuadratureSpec, dim: int) -> ExpectationRule:
    if dim <= spec.gh_max_dim:
        return GaussHermiteRule(dim, spec.gh_order)
    if spec.seed is None:
        raise QuadratureError("seed required for quasi-Monte-Carlo quadrature")
    return RQMCRule(dim, spec.qmc_points, spec.batches, spec.seed)


def laplace_rule(lam: float, rate: float, order: int = 16, tol: float = 1e-12) -> tuple[np.ndarray, np.ndarray]:
    """Nodes t_i and weights w_i with sum w_i g(t_i) ~ int_0^inf e^{-lam t} g(t) dt.

    The interval is truncated at T with e^{-lam T} = tol and split into
    panels that double in width from ``h0 = 0.05 / rate``, so that transients
    up to the given rate are resolved near t = 0.
    """
    if lam <= 0:
        raise ValueError("lambda must be positive")
    T = math.log(1.0 / tol) / lam
    h0 = min(0.05 / max(rate, 1e-12), T)
    edges = [0.0]
    h = h0
    while edges[-1] + h < T:
        edges.append(edges[-1] + h)
        h *= 2.0
    edges.append(T)
    x, w = np.polynomial.legendre.leggauss(order)
    ts, ws = [], []
    for a, b in zip(edges[:-1], edges[1:]):
        half = 0.5 * (b - a)
        ts.append(a + half * (x + 1.0))
        ws.append(half * w)
    t = np.concatenate(ts)
    return t, np.concatenate(ws) * np.exp(-lam * t)
