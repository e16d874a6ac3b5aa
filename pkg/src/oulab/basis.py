"""Frames of functionals whose Q_inf-images are orthonormal in the Cameron-Martin space."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

SKIP_TOL = 1e-12


class BasisError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class ThetaBasis:
    """Columns of ``frame`` are the functionals f*_j; ``images`` holds e_j = Q_inf f*_j."""

    frame: np.ndarray
    images: np.ndarray
    gram_log: list = field(default_factory=list)

    @property
    def width(self) -> int:
        return self.frame.shape[1]

    def truncate(self, n: int) -> "ThetaBasis":
        if not 1 <= n <= self.width:
            raise BasisError(f"cannot truncate a width-{self.width} basis to {n}")
        return ThetaBasis(self.frame[:, :n], self.images[:, :n], self.gram_log)


def gram_schmidt_theta(q_inf: np.ndarray, seeds=None, n: int | None = None, normalize: bool = True) -> ThetaBasis:
    """Modified Gram-Schmidt in the inner product <Q_inf x, y>.

    Seeds default to the canonical vectors. A seed whose residual norm falls
    below ``SKIP_TOL`` times its own norm is skipped and logged.
    ``normalize=False`` keeps the residuals unscaled (negative control only).
    """
    q_inf = np.asarray(q_inf, dtype=float)
    N = q_inf.shape[0]
    if seeds is None:
        seeds = np.eye(N)
    else:
        seeds = np.asarray(seeds, dtype=float)
        if seeds.ndim == 1:
            seeds = seeds[:, None]
        if seeds.shape[0] != N:
            raise BasisError(f"seeds must have {N} rows, got {seeds.shape[0]}")
    if n is None:
        n = min(N, seeds.shape[1])

    cols: list[np.ndarray] = []
    log = []
    for idx in range(seeds.shape[1]):
        if len(cols) == n:
            break
        g = seeds[:, idx].copy()
        g_norm = np.sqrt(max(g @ q_inf @ g, 0.0))
        v = g.copy()
        for f in cols:
            # with normalize=False the columns are not unit, divide by their square norm
            v -= ((q_inf @ v) @ f) / (f @ q_inf @ f) * f
        r = np.sqrt(max(v @ q_inf @ v, 0.0))
        if g_norm == 0.0 or r < SKIP_TOL * g_norm:
            log.append({"seed": idx, "residual": float(r), "kept": False})
            continue
        log.append({"seed": idx, "residual": float(r), "kept": True})
        cols.append(v / r if normalize else v)

    if len(cols) < n:
        raise BasisError(f"insufficient seed span: found {len(cols)} independent directions, need {n}")
    F = np.column_stack(cols)
    E = q_inf @ F
    F.setflags(write=False)
    E.setflags(write=False)
    return ThetaBasis(frame=F, images=E, gram_log=log)


def project_Pn(basis: ThetaBasis, x) -> np.ndarray:
    """Frame coordinates (<x, f*_1>, ..., <x, f*_n>)."""
    return basis.frame.T @ np.asarray(x, dtype=float)


def pushforward_covariance(basis: ThetaBasis, q_inf: np.ndarray) -> np.ndarray:
    return basis.frame.T @ np.asarray(q_inf, dtype=float) @ basis.frame
