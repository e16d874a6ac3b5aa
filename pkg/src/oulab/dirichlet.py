"""Dirichlet-Laplacian preset: drift diag(-(pi i)^2) with a 2x2 correlated diffusion block.

The Lyapunov-consistent tail values are Q_inf[i, i] = 1/(2 i^2 pi^2) and
B[i, i] = -1/2. ``tail="printed"`` exposes the alternative values
1/(i^2 pi^2) and +1 (identity); they do not satisfy the Lyapunov equation
and are kept for comparison only.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .model import SpectralModel, block2_diffusion, make_model

PI2 = math.pi**2


@dataclass(frozen=True, eq=False)
class ExamplePreset:
    q1: float
    q2: float
    q3: float
    N: int
    model: SpectralModel
    q_inf: np.ndarray
    b_mat: np.ndarray
    admissible: bool
    admissibility_margin: float
    sufficient: bool
    nu_formula: float | None
    tail: str

    def skew(self) -> np.ndarray:
        """B - B^T: only the (1, 2) block is nonzero."""
        K = np.zeros((self.N, self.N))
        K[0, 1] = -0.6 * self.q2
        K[1, 0] = 0.6 * self.q2
        return K


def _check_q(q1: float, q2: float, q3: float) -> None:
    if q1 <= 0 or q3 <= 0:
        raise ValueError("q1 and q3 must be positive")
    if q1 * q3 - q2 * q2 <= 0:
        raise ValueError(f"det condition violated: q1*q3 - q2^2 = {q1 * q3 - q2 * q2:.6g} <= 0")


def admissibility_lhs(q1: float, q2: float, q3: float) -> float:
    det = q1 * q3 - q2 * q2
    return 9.0 / 25.0 * q2 * q2 * (q1 * q3 + q2 * q2) / det**2


def admissibility(q1: float, q2: float, q3: float) -> tuple[bool, float, bool]:
    """(LHS < 1, margin 1 - LHS, sufficient condition 3 q2^2 <= q1 q3)."""
    _check_q(q1, q2, q3)
    lhs = admissibility_lhs(q1, q2, q3)
    return lhs < 1.0, 1.0 - lhs, 3.0 * q2 * q2 <= q1 * q3


def nu_formula(q1: float, q2: float, q3: float) -> float:
    """(9/25)(r + 1)/(r - 1)^2 with r = q1 q3 / q2^2; zero when q2 = 0.

    Multiplied through by q2^4 this is the admissibility left-hand side,
    which stays finite as q2 -> 0.
    """
    _check_q(q1, q2, q3)
    return admissibility_lhs(q1, q2, q3)


def closed_form_q_inf(q1: float, q2: float, q3: float, N: int, tail: str = "consistent") -> np.ndarray:
    factor = {"consistent": 2.0, "printed": 1.0}[tail]
    out = np.diag([1.0 / (factor * i * i * PI2) for i in range(1, N + 1)])
    out[:2, :2] = [[q1 / (2 * PI2), q2 / (5 * PI2)], [q2 / (5 * PI2), q3 / (8 * PI2)]]
    return out


def closed_form_b(q1: float, q2: float, q3: float, N: int, tail: str = "consistent") -> np.ndarray:
    """Drift pairing on the raw canonical frame, B = Q_inf A (A symmetric here)."""
    value = {"consistent": -0.5, "printed": 1.0}[tail]
    out = value * np.eye(N)
    out[:2, :2] = [[-q1 / 2, -4 * q2 / 5], [-q2 / 5, -q3 / 2]]
    return out


def build_example(q1: float, q2: float, q3: float, N: int, tail: str = "consistent") -> ExamplePreset:
    _check_q(q1, q2, q3)
    if N < 2:
        raise ValueError("N must be at least 2")
    if tail not in ("consistent", "printed"):
        raise ValueError(f"unknown tail convention {tail!r}")
    model = make_model(
        drift=None,
        drift_diag=[-((math.pi * i) ** 2) for i in range(1, N + 1)],
        diffusion=block2_diffusion(q1, q2, q3, N),
        label=f"dirichlet q=({q1!r}, {q2!r}, {q3!r}) N={N}",
    )
    ok, margin, sufficient = admissibility(q1, q2, q3)
    return ExamplePreset(
        q1=q1,
        q2=q2,
        q3=q3,
        N=N,
        model=model,
        q_inf=closed_form_q_inf(q1, q2, q3, N, tail),
        b_mat=closed_form_b(q1, q2, q3, N, tail),
        admissible=ok,
        admissibility_margin=margin,
        sufficient=sufficient,
        nu_formula=nu_formula(q1, q2, q3) if ok else None,
        tail=tail,
    )


def parse_example_list(text: str) -> tuple[float, float, float, int]:
    """Parse "q1,q2,q3,N"."""
    parts = [p.strip() for p in text.split(",")]
    if len(parts) != 4:
        raise ValueError(f"expected q1,q2,q3,N, got {text!r}")
    q1, q2, q3 = (float(p) for p in parts[:3])
    N = int(parts[3])
    return q1, q2, q3, N


def build_degenerate(q1: float = 1.0, q2: float = 0.5, q3: float = 1.0, N: int = 5, active: int = 4, coupling: float = 2 * PI2) -> SpectralModel:
    """Dirichlet drift with a diffusion that vanishes beyond the first ``active`` coordinates.

    Q = blockdiag([[q1, q2], [q2, q3]], I_{active-2}, 0_{N-active}). A skew
    nearest-neighbour chain from the second coordinate onward carries the
    noise into the silent tail, so Q_inf is nondegenerate while Q is not. The
    symmetric part of A is unchanged, hence still negative definite.
    """
    _check_q(q1, q2, q3)
    if not 2 <= active < N:
        raise ValueError("need 2 <= active < N for a degenerate tail")
    A = np.diag([-((math.pi * i) ** 2) for i in range(1, N + 1)])
    for i in range(1, N - 1):
        A[i, i + 1] += coupling
        A[i + 1, i] -= coupling
    Q = block2_diffusion(q1, q2, q3, N)
    Q[active:, active:] = 0.0
    return make_model(A, Q, label=f"degenerate dirichlet q=({q1!r}, {q2!r}, {q3!r}) N={N} active={active}")
