"""Solve lam V - L_n V = phi over a frame ladder and check the a-priori and regularity bounds.

Criteria per (n, eps) cell:
  a1  ||V|| <= ||phi|| / lam
  a2  ||D_H V|| <= sqrt(2 / lam) ||phi||
  b   lam ||V||^2 + (1/2) E[grad V^T Q_eps grad V] - E[phi V] = 0
  c   E(V, g) - E[(phi - lam V) g] = 0 for a fixed battery of cosine tests g
  d   (1/4)(1 - nu) ||D_H^2 V||^2 + ||P_n D_A V||^2 <= 2 ||phi||^2
  e   ||V||_{W^{2,2}_H} + ||P_n D_A V|| <= K_bound ||phi||,
      K_bound = sqrt(1/lam^2 + 2/lam + 8/(1 - nu)) + sqrt(2)

Norms use the unregularized (Q_n, B_n); the identities (b), (c) use the pair
actually solved. Error bars come from the expectation rule (embedded
Gauss-Hermite pair, or randomized-QMC batch means).
"""

from __future__ import annotations

import csv
import io
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .basis import gram_schmidt_theta
from .covariance import covariance_infinity
from .functions import Cosine, CylinderFunction
from .galerkin import HypothesisError, build_pair, nu_min
from .mehler import MehlerKernel, Resolvent
from .model import SpectralModel, degeneracy
from .quadrature import Estimate, QuadratureSpec, expectation_rule
from .sobolev import norm_integrands

SCHEMA = "ou-report/1"
REL_FLOOR = 1e-9
ABS_FLOOR = 1e-14
BATTERY_SIZE = 5


class VerificationError(ValueError):
    pass


def cosine_battery(n: int, size: int = BATTERY_SIZE) -> list[Cosine]:
    """Fixed weak-form test functions cos(a_i . xi + b_i) on n coordinates."""
    rng = np.random.default_rng(7)
    freqs = 0.6 * rng.standard_normal((size, n))
    phases = np.linspace(0.0, 1.2, size)
    return [Cosine(a, b) for a, b in zip(freqs, phases)]


def inequality_status(lhs: float, rhs: float, err: float) -> tuple[str, float]:
    margin = rhs - lhs
    floor = REL_FLOOR * max(abs(lhs), abs(rhs)) + ABS_FLOOR
    if margin - 2 * err >= -floor:
        return "pass", margin
    if margin + 2 * err < -floor:
        return "fail", margin
    return "inconclusive", margin


def identity_status(residual: float, err: float, scale: float) -> str:
    return "pass" if abs(residual) <= 2 * err + REL_FLOOR * scale + ABS_FLOOR else "fail"


def _pair(est: Estimate) -> list[float]:
    return [float(est.value), float(est.err)]


@dataclass
class CellReport:
    n: int
    epsilon: float
    nu: float | None
    norms: dict
    criteria: dict
    K: float
    K_bound: float | None
    comparison: bool = False

    @property
    def status(self) -> str:
        states = [c["status"] for c in self.criteria.values()]
        if "fail" in states:
            return "fail"
        if "inconclusive" in states:
            return "inconclusive"
        return "pass"

    def relative_margins(self) -> dict:
        out = {}
        for key in ("a1", "a2", "d"):
            c = self.criteria[key]
            if c["rhs"]:
                out[key] = c["margin"] / c["rhs"]
        out["K"] = self.K
        return out

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "epsilon": self.epsilon,
            "comparison": self.comparison,
            "nu": self.nu,
            "norms": self.norms,
            "criteria": self.criteria,
            "K": self.K,
            "K_bound": self.K_bound,
            "status": self.status,
        }


@dataclass
class VerificationReport:
    lam: float
    ladder: list
    eps_grid: list
    quad: QuadratureSpec
    phi: dict
    label: str
    cells: list = field(default_factory=list)

    @property
    def status(self) -> str:
        states = [c.status for c in self.cells if not c.comparison]
        if "fail" in states:
            return "fail"
        if "inconclusive" in states:
            return "inconclusive"
        return "pass"

    def cell(self, n: int, epsilon: float = 0.0) -> CellReport:
        for c in self.cells:
            if c.n == n and c.epsilon == epsilon:
                return c
        raise KeyError((n, epsilon))

    def k_stability(self) -> dict:
        """Spread max(K)/min(K) - 1 across the ladder, per epsilon."""
        out = {}
        for eps in self.eps_grid:
            ks = [c.K for c in self.cells if c.epsilon == eps]
            lo = min(ks)
            out[repr(float(eps))] = (max(ks) / lo - 1.0) if lo > 0 else 0.0
        return out

    def to_dict(self) -> dict:
        return {
            "schema": SCHEMA,
            "label": self.label,
            "lambda": self.lam,
            "ladder": list(self.ladder),
            "epsilon_grid": list(self.eps_grid),
            "quadrature": self.quad.to_dict(),
            "phi": self.phi,
            "cells": [c.to_dict() for c in self.cells],
            "K_spread": self.k_stability(),
            "status": self.status,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, allow_nan=False) + "\n"


def _clean(x: float) -> float | None:
    x = float(x)
    return x if math.isfinite(x) else None


def run_cell(model: SpectralModel, q_inf, basis, n: int, epsilon: float, lam: float, phi: CylinderFunction, quad: QuadratureSpec, comparison: bool = False) -> CellReport:
    pair = build_pair(model, q_inf, basis, n, epsilon)
    base = pair if epsilon == 0 else build_pair(model, q_inf, basis, n, 0.0)
    try:
        nu = nu_min(pair)
    except HypothesisError:
        nu = None
    sol = Resolvent(MehlerKernel(pair), lam, phi, quad)
    tests = cosine_battery(n)
    rule = expectation_rule(quad, n)

    def integrand(xi):
        v, g, H = sol.evaluate(xi)
        f = phi.value(xi)
        cols = [norm_integrands(base, v, g, H), np.column_stack([f * f, f * v, np.einsum("pi,ij,pj->p", g, pair.q_mat, g)])]
        for t in tests:
            tv, tg, _ = t.evaluate(xi)
            cols.append(np.column_stack([-np.einsum("pi,ij,pj->p", tg, pair.b_mat, g), (f - lam * v) * tv]))
        return np.hstack(cols)

    est = rule.expect(integrand)
    sq = {name: est[i] for i, name in enumerate(["V", "DH", "DH2", "PDA", "phi", "phiV", "DH_eps"])}
    norm = {k: Estimate.derive(lambda x: np.sqrt(max(x, 0.0)), sq[k]) for k in ("V", "DH", "DH2", "PDA", "phi")}
    phi_n = float(norm["phi"].value)

    criteria = {}
    for key, lhs_est, factor in (("a1", norm["V"], 1.0 / lam), ("a2", norm["DH"], math.sqrt(2.0 / lam))):
        gap = Estimate.derive(lambda l, p, f=factor: f * p - l, lhs_est, norm["phi"])
        status, margin = inequality_status(float(lhs_est.value), factor * phi_n, float(gap.err))
        criteria[key] = {"lhs": float(lhs_est.value), "rhs": factor * phi_n, "margin": margin, "err": float(gap.err), "status": status}

    energy = Estimate.derive(lambda v, d, p: lam * v + 0.5 * d - p, sq["V"], sq["DH_eps"], sq["phiV"])
    scale = lam * float(sq["V"].value) + 0.5 * float(sq["DH_eps"].value) + abs(float(sq["phiV"].value))
    criteria["b"] = {
        "residual": float(energy.value),
        "err": float(energy.err),
        "status": identity_status(float(energy.value), float(energy.err), scale),
    }

    weak = []
    for i in range(len(tests)):
        a, b = est[7 + 2 * i], est[8 + 2 * i]
        res = Estimate.derive(lambda x, y: x - y, a, b)
        sc = abs(float(a.value)) + abs(float(b.value)) + phi_n**2
        weak.append({"residual": float(res.value), "err": float(res.err), "status": identity_status(float(res.value), float(res.err), sc)})
    worst = "fail" if any(w["status"] == "fail" for w in weak) else "pass"
    criteria["c"] = {"tests": weak, "status": worst}

    if nu is None or nu >= 1.0:
        lhs_d = float(sq["PDA"].value)
        criteria["d"] = {"lhs": None, "rhs": 2 * phi_n**2, "margin": None, "err": None, "status": "inconclusive", "note": "no nu < 1 for this pair"}
        K_bound = None
    else:
        lhs = Estimate.derive(lambda d2, pd: 0.25 * (1 - nu) * d2 + pd, sq["DH2"], sq["PDA"])
        gap = Estimate.derive(lambda l, p: 2 * p - l, lhs, sq["phi"])
        status, margin = inequality_status(float(lhs.value), 2 * phi_n**2, float(gap.err))
        criteria["d"] = {"lhs": float(lhs.value), "rhs": 2 * phi_n**2, "margin": margin, "err": float(gap.err), "status": status}
        K_bound = math.sqrt(1 / lam**2 + 2 / lam + 8 / (1 - nu)) + math.sqrt(2)

    def k_of(v, dh, dh2, pda, p):
        total = math.sqrt(max(v + dh + dh2, 0.0)) + math.sqrt(max(pda, 0.0))
        return total / math.sqrt(p) if p > 0 else 0.0

    K = Estimate.derive(k_of, sq["V"], sq["DH"], sq["DH2"], sq["PDA"], sq["phi"])
    if K_bound is None:
        criteria["e"] = {"lhs": float(K.value), "rhs": None, "margin": None, "err": float(K.err), "status": "inconclusive", "note": "no nu < 1 for this pair"}
    else:
        status, margin = inequality_status(float(K.value), K_bound, float(K.err))
        criteria["e"] = {"lhs": float(K.value), "rhs": K_bound, "margin": margin, "err": float(K.err), "status": status}

    norms = {k: _pair(v) for k, v in norm.items()}
    return CellReport(n=n, epsilon=float(epsilon), nu=None if nu is None else _clean(nu), norms=norms, criteria=criteria, K=float(K.value), K_bound=K_bound, comparison=comparison)


def solve_and_verify(model: SpectralModel, lam: float, phi: CylinderFunction, n_ladder, eps_grid=(0.0,), quad: QuadratureSpec | None = None, jobs: int = 1) -> VerificationReport:
    quad = quad or QuadratureSpec()
    ladder = [int(n) for n in n_ladder]
    eps_grid = [float(e) for e in eps_grid]
    if lam <= 0:
        raise VerificationError("lambda must be positive")
    if not ladder:
        raise VerificationError("empty n ladder")
    if min(ladder) < phi.arity:
        raise VerificationError(f"every n must be at least the profile arity {phi.arity}")
    if max(ladder) > model.dim:
        raise VerificationError(f"n ladder exceeds the model dimension {model.dim}")
    degenerate = not degeneracy(model).nondegenerate
    if degenerate and not any(e > 0 for e in eps_grid):
        raise VerificationError("regularization required: degenerate diffusion needs a positive epsilon in the grid")
    if any(e < 0 for e in eps_grid) or not eps_grid:
        raise VerificationError("epsilon grid must be nonempty and nonnegative")

    q_inf = covariance_infinity(model).q_inf
    basis = gram_schmidt_theta(q_inf, n=max(ladder))
    tasks = [(n, e) for e in eps_grid for n in ladder]

    def work(task):
        n, e = task
        return run_cell(model, q_inf, basis, n, e, lam, phi, quad, comparison=degenerate and e == 0)

    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            cells = list(pool.map(work, tasks))
    else:
        cells = [work(t) for t in tasks]
    return VerificationReport(lam=float(lam), ladder=ladder, eps_grid=eps_grid, quad=quad, phi=phi.to_dict(), label=model.label, cells=cells)


def convergence_study(model: SpectralModel, lam: float, phi: CylinderFunction, n_ladder, quad: QuadratureSpec | None = None, epsilon: float = 0.0) -> list[dict]:
    """W^{1,2}_H distances between consecutive ladder solutions, sampled on the larger frame."""
    quad = quad or QuadratureSpec()
    ladder = [int(n) for n in n_ladder]
    if any(b <= a for a, b in zip(ladder, ladder[1:])):
        raise VerificationError("ladder must be strictly increasing")
    if len(ladder) < 2:
        return []
    q_inf = covariance_infinity(model).q_inf
    basis = gram_schmidt_theta(q_inf, n=ladder[-1])
    sols = {}
    for n in ladder:
        pair = build_pair(model, q_inf, basis, n, epsilon)
        sols[n] = (pair, Resolvent(MehlerKernel(pair), lam, phi, quad))
    rows = []
    for small, big in zip(ladder, ladder[1:]):
        pair_big, sol_big = sols[big]
        sol_small = sols[small][1]

        def integrand(xi, small=small, sol_big=sol_big, sol_small=sol_small, q=pair_big.q_mat):
            v1, g1, _ = sol_big.evaluate(xi)
            v0, g0, _ = sol_small.evaluate(xi[:, :small])
            dg = g1.copy()
            dg[:, :small] -= g0
            dv = v1 - v0
            return np.column_stack([dv * dv, np.einsum("pi,ij,pj->p", dg, q, dg)])

        est = expectation_rule(quad, big).expect(integrand)
        dist = Estimate.derive(lambda a, b: math.sqrt(max(a + b, 0.0)), est[0], est[1])
        rows.append({"n_from": small, "n_to": big, "distance": float(dist.value), "err": float(dist.err)})
    return rows


def convergence_csv(rows: list[dict]) -> str:
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=["n_from", "n_to", "distance", "err"], lineterminator="\n")
    writer.writeheader()
    for row in rows:
        writer.writerow({k: repr(v) if isinstance(v, float) else v for k, v in row.items()})
    return buf.getvalue()


def matrix_identity_residuals(trials: int, dim: int, seed) -> np.ndarray:
    """Scaled residuals of 4Tr[HCHC] = Tr[MCMC] + Tr[(H - H^T)C(H - H^T)C] with H + H^T = -M."""
    rng = np.random.default_rng(seed)
    out = np.empty(trials)
    for i in range(trials):
        G = rng.standard_normal((dim, dim))
        M = G + G.T
        S = rng.standard_normal((dim, dim))
        H = -0.5 * M + (S - S.T)
        C = rng.standard_normal((dim, dim))
        C = C + C.T
        K = H - H.T
        lhs = 4 * np.trace(H @ C @ H @ C)
        t1 = np.trace(M @ C @ M @ C)
        t2 = np.trace(K @ C @ K @ C)
        scale = abs(lhs) + abs(t1) + abs(t2) + 1e-300
        out[i] = abs(lhs - t1 - t2) / scale
    return out


def matrix_identity_check(trials: int, dim: int, seed=0) -> float:
    if dim < 1:
        raise ValueError("dim must be at least 1")
    return float(np.max(matrix_identity_residuals(trials, dim, seed)))
