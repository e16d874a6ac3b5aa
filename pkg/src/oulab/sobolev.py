"""Gaussian Sobolev quantities in frame coordinates, expectations over N(0, I_n).

A function u is anything with ``evaluate(xi) -> (value, gradient, Hessian)``
on points of shape (P, n): cylinder profiles and resolvent solutions both
qualify. Expectations take an ``ExpectationRule`` or a ``QuadratureSpec``.
"""

from __future__ import annotations

import numpy as np

from .galerkin import GalerkinPair
from .mehler import psd_sqrt
from .quadrature import Estimate, ExpectationRule, QuadratureSpec, expectation_rule


def _rule(rule, n: int) -> ExpectationRule:
    if isinstance(rule, ExpectationRule):
        if rule.dim != n:
            raise ValueError(f"rule has dimension {rule.dim}, expected {n}")
        return rule
    return expectation_rule(rule if isinstance(rule, QuadratureSpec) else QuadratureSpec(), n)


def whitened_hs_squared(q_mat: np.ndarray, hess: np.ndarray) -> np.ndarray:
    """||L^T C L||_F^2 = Tr[Q C Q C] with Q = L L^T, for a stack of Hessians C."""
    L = psd_sqrt(q_mat)
    W = np.einsum("ai,pab,bj->pij", L, hess, L)
    return np.sum(W * W, axis=(1, 2))


def norm_integrands(pair: GalerkinPair, v, g, H) -> np.ndarray:
    """Columns v^2, grad v^T Q grad v, Tr[QCQC], |B grad v|^2."""
    Bg = g @ pair.b_mat.T
    return np.column_stack([
        v * v,
        np.einsum("pi,ij,pj->p", g, pair.q_mat, g),
        whitened_hs_squared(pair.q_mat, H),
        np.sum(Bg * Bg, axis=1),
    ])


def squared_norms(u, pair: GalerkinPair, rule=None) -> Estimate:
    """Estimate of (||u||^2, ||D_H u||^2, ||D_H^2 u||_HS^2, ||P_n D_A u||^2)."""
    r = _rule(rule, pair.n)
    return r.expect(lambda xi: norm_integrands(pair, *u.evaluate(xi)))


def norm_L2(u, rule=None, n: int | None = None) -> float:
    if n is None:
        if isinstance(rule, ExpectationRule):
            n = rule.dim
        elif hasattr(u, "kernel"):
            n = u.kernel.n
        else:
            n = u.arity
    r = _rule(rule, n)
    return float(np.sqrt(r.expect(lambda xi: np.asarray(u.evaluate(xi)[0])[:, None] ** 2).value[0]))


def norm_DH(u, pair: GalerkinPair, rule=None) -> float:
    return float(np.sqrt(squared_norms(u, pair, rule).value[1]))


def norm_DH2_HS(u, pair: GalerkinPair, rule=None) -> float:
    return float(np.sqrt(squared_norms(u, pair, rule).value[2]))


def norm_PnDAinf(u, pair: GalerkinPair, rule=None) -> float:
    return float(np.sqrt(squared_norms(u, pair, rule).value[3]))


def energy_form(u, w, pair: GalerkinPair, rule=None) -> float:
    """E(u, w) = -E[grad w^T B grad u]."""
    r = _rule(rule, pair.n)

    def integrand(xi):
        gu = u.evaluate(xi)[1]
        gw = w.evaluate(xi)[1]
        return -np.einsum("pi,ij,pj->p", gw, pair.b_mat, gu)[:, None]

    return float(r.expect(integrand).value[0])


def energy_form_symmetric(u, w, pair: GalerkinPair, rule=None) -> float:
    """1/2 E[grad u^T Q grad w], the symmetric part of the form."""
    r = _rule(rule, pair.n)

    def integrand(xi):
        gu = u.evaluate(xi)[1]
        gw = w.evaluate(xi)[1]
        return 0.5 * np.einsum("pi,ij,pj->p", gu, pair.q_mat, gw)[:, None]

    return float(r.expect(integrand).value[0])


def _check_field(field, n: int):
    out = []
    for item in field:
        try:
            phi, j = item
        except (TypeError, ValueError):
            raise ValueError("field entries must be (profile, direction index) pairs") from None
        if not isinstance(j, (int, np.integer)) or not 0 <= j < n:
            raise ValueError(f"direction index {j!r} is not an admissible frame direction B i* f*_j")
        out.append((phi, int(j)))
    return out


def divergence_H(field, pair: GalerkinPair, xi) -> np.ndarray:
    """-sum_i ([D_H phi_i, h_j(i)]_H - phi_i V*h_j(i)) with h_j = B i* f*_j.

    In coordinates [D_H phi, h_j]_H = (B^T grad phi)_j and the Gaussian
    functional of V*h_j is sum_k b_kj xi_k.
    """
    field = _check_field(field, pair.n)
    xi = np.atleast_2d(np.asarray(xi, dtype=float))
    out = np.zeros(xi.shape[0])
    for phi, j in field:
        col = pair.b_mat[:, j]
        out -= phi.grad(xi) @ col - phi.value(xi) * (xi @ col)
    return out


def ibp_estimate(f, j: int, pair: GalerkinPair, rule=None) -> Estimate:
    """Estimates of (E[[D_H f, h_j]_H], E[f V*h_j]) as a length-2 Estimate."""
    r = _rule(rule, pair.n)
    col = pair.b_mat[:, j]

    def integrand(xi):
        v, g, _ = f.evaluate(xi)
        return np.column_stack([g @ col, v * (xi @ col)])

    return r.expect(integrand)


def divergence_norm_estimate(field, pair: GalerkinPair, rule=None) -> Estimate:
    """Estimates of (E[div^2], E[|V*Psi|^2], E[Tr[D Psi D Psi]]).

    With w_i = B[:, j(i)] the field is W = sum_i phi_i w_i and the identity
    reads E[div^2] = E[|W|^2] + E[sum_{i,l} (grad phi_i . w_l)(grad phi_l . w_i)].
    """
    field = _check_field(field, pair.n)
    r = _rule(rule, pair.n)
    Wcols = np.column_stack([pair.b_mat[:, j] for _, j in field])

    def integrand(xi):
        vals = np.column_stack([phi.value(xi) for phi, _ in field])
        grads = np.stack([phi.grad(xi) for phi, _ in field], axis=1)
        W = vals @ Wcols.T
        div = -np.einsum("pin,ni->p", grads, Wcols) + np.sum(W * xi, axis=1)
        pairing = np.einsum("pin,nl->pil", grads, Wcols)
        trace = np.einsum("pil,pli->p", pairing, pairing)
        return np.column_stack([div * div, np.sum(W * W, axis=1), trace])

    return r.expect(integrand)


def hs_experiment(u, pair: GalerkinPair, rule=None, full_gram: np.ndarray | None = None) -> dict:
    """Compare ||D_H (B D_H u)||_HS with (1/2)||D_H^2 u||_HS.

    The left side uses the Gram matrix of the directions B i* f*_j in H,
    either projected on the frame span (B^T Q^{-1} B) or a supplied full one.
    Both sides and their ratio are reported; no relation is asserted.
    """
    r = _rule(rule, pair.n)
    q = pair.q_mat
    proj = pair.b_mat.T @ np.linalg.solve(q, pair.b_mat)
    grams = [proj] if full_gram is None else [proj, np.asarray(full_gram)]

    def integrand(xi):
        H = u.evaluate(xi)[2]
        cols = [np.einsum("pij,jk,pkl,li->p", H, G, H, q) for G in grams]
        cols.append(whitened_hs_squared(q, H))
        return np.column_stack(cols)

    est = r.expect(integrand)
    right = 0.5 * np.sqrt(est.value[-1])
    out = {"right_half_hs": float(right), "left_projected": float(np.sqrt(max(est.value[0], 0.0)))}
    if full_gram is not None:
        out["left_full"] = float(np.sqrt(max(est.value[1], 0.0)))
    out["ratio_projected"] = out["left_projected"] / right if right > 0 else float("nan")
    return out
