"""Truncated Ornstein-Uhlenbeck operator pairs (A, Q) and their JSON form."""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np


class ModelError(ValueError):
    """Raised when a model config is malformed or violates a structural check."""


class ContractionWarning(UserWarning):
    """The drift fails the log-norm test but is still Hurwitz."""


SYMMETRY_TOL = 1e-12
PSD_TOL = 1e-12
CONTRACTION_TOL = 1e-12


@dataclass(frozen=True)
class DegeneracyFlag:
    nondegenerate: bool
    rank: int


@dataclass(frozen=True, eq=False)
class SpectralModel:
    """Drift A and diffusion Q on an N-dimensional coordinate truncation.

    ``drift_diag`` keeps the eigenvalues when the drift was given in diagonal
    shorthand; ``drift`` is always the full matrix.
    """

    dim: int
    drift: np.ndarray
    diffusion: np.ndarray
    label: str = ""
    drift_diag: np.ndarray | None = field(default=None, repr=False)

    @property
    def A(self) -> np.ndarray:
        return self.drift

    @property
    def Q(self) -> np.ndarray:
        return self.diffusion


def _as_matrix(data, dim: int, what: str) -> np.ndarray:
    try:
        mat = np.array(data, dtype=float)
    except (TypeError, ValueError) as exc:
        raise ModelError(f"{what}: cannot parse numeric matrix ({exc})") from None
    if mat.shape != (dim, dim):
        raise ModelError(f"{what}: dimension mismatch, expected {dim}x{dim}, got shape {mat.shape}")
    if not np.all(np.isfinite(mat)):
        raise ModelError(f"{what}: non-finite entries")
    return mat


def make_model(drift, diffusion, label: str = "", drift_diag=None) -> SpectralModel:
    """Validate and freeze a model from array-likes.

    If ``drift_diag`` is given it takes precedence and ``drift`` may be None.
    """
    if drift_diag is not None:
        diag = np.array(drift_diag, dtype=float).ravel()
        dim = diag.size
        A = np.diag(diag)
    else:
        A = np.array(drift, dtype=float)
        if A.ndim != 2 or A.shape[0] != A.shape[1]:
            raise ModelError(f"drift: expected a square matrix, got shape {A.shape}")
        dim = A.shape[0]
        diag = None
    if dim < 1:
        raise ModelError("dim must be a positive integer")
    A = _as_matrix(A, dim, "drift")
    Q = _as_matrix(diffusion, dim, "diffusion")

    qnorm = np.linalg.norm(Q, 2)
    asym = np.max(np.abs(Q - Q.T))
    if asym > SYMMETRY_TOL * max(qnorm, 1.0):
        raise ModelError(f"diffusion is not symmetric: max|Q - Q^T| = {asym:.3e}")
    Q = 0.5 * (Q + Q.T)
    qmin = np.linalg.eigvalsh(Q)[0] if dim else 0.0
    if qmin < -PSD_TOL * qnorm:
        raise ModelError(f"diffusion is not positive semidefinite: min eigenvalue = {qmin:.6e}")

    check_contraction(A)

    A.setflags(write=False)
    Q.setflags(write=False)
    if diag is not None:
        diag.setflags(write=False)
    return SpectralModel(dim=dim, drift=A, diffusion=Q, label=str(label), drift_diag=diag)


def check_contraction(A: np.ndarray) -> float:
    """Return the log-norm of A; raise if A generates no contraction and is not Hurwitz."""
    lognorm = float(np.linalg.eigvalsh(0.5 * (A + A.T))[-1])
    if lognorm <= CONTRACTION_TOL:
        return lognorm
    spectral_abscissa = float(np.max(np.linalg.eigvals(A).real))
    if spectral_abscissa < 0.0:
        warnings.warn(
            f"drift fails the contraction check (max eig of symmetric part = {lognorm:.3e}) "
            "but is Hurwitz; accepted",
            ContractionWarning,
            stacklevel=3,
        )
        return lognorm
    raise ModelError(
        f"contraction check failed: max eigenvalue of (A + A^T)/2 = {lognorm:.6e}, "
        f"spectral abscissa = {spectral_abscissa:.6e}"
    )


def block2_diffusion(q1: float, q2: float, q3: float, dim: int, tail: str = "identity") -> np.ndarray:
    """2x2 block [[q1, q2], [q2, q3]] followed by an identity (or zero) tail."""
    if dim < 2:
        raise ModelError("block2 diffusion needs dim >= 2")
    if tail == "identity":
        Q = np.eye(dim)
    elif tail == "zero":
        Q = np.zeros((dim, dim))
    else:
        raise ModelError(f"unknown block2 tail {tail!r}")
    Q[:2, :2] = [[q1, q2], [q2, q3]]
    return Q


def model_from_dict(cfg: dict) -> SpectralModel:
    if not isinstance(cfg, dict):
        raise ModelError("model config must be a JSON object")
    try:
        dim = cfg["dim"]
        drift = cfg["drift"]
        diffusion = cfg["diffusion"]
    except KeyError as exc:
        raise ModelError(f"missing field {exc.args[0]!r}") from None
    if not isinstance(dim, int) or isinstance(dim, bool) or dim < 1:
        raise ModelError(f"dim must be a positive integer, got {dim!r}")

    if not isinstance(drift, dict) or len(drift) != 1:
        raise ModelError('drift must be {"diag": [...]} or {"dense": [[...]]}')
    if "diag" in drift:
        diag = np.array(drift["diag"], dtype=float).ravel()
        if diag.size != dim:
            raise ModelError(f"drift: dimension mismatch, expected {dim} eigenvalues, got {diag.size}")
        kwargs = {"drift": None, "drift_diag": diag}
    elif "dense" in drift:
        kwargs = {"drift": _as_matrix(drift["dense"], dim, "drift")}
    else:
        raise ModelError(f"unknown drift form {next(iter(drift))!r}")

    if not isinstance(diffusion, dict) or len(diffusion) != 1:
        raise ModelError('diffusion must be {"dense": [[...]]} or {"block2": {...}}')
    if "dense" in diffusion:
        Q = _as_matrix(diffusion["dense"], dim, "diffusion")
    elif "block2" in diffusion:
        b = diffusion["block2"]
        try:
            Q = block2_diffusion(float(b["q1"]), float(b["q2"]), float(b["q3"]), dim, b.get("tail", "identity"))
        except KeyError as exc:
            raise ModelError(f"block2: missing field {exc.args[0]!r}") from None
    else:
        raise ModelError(f"unknown diffusion form {next(iter(diffusion))!r}")

    return make_model(diffusion=Q, label=cfg.get("label", ""), **kwargs)


def model_to_dict(model: SpectralModel) -> dict:
    if model.drift_diag is not None:
        drift = {"diag": [float(x) for x in model.drift_diag]}
    else:
        drift = {"dense": model.drift.tolist()}
    return {
        "dim": model.dim,
        "drift": drift,
        "diffusion": {"dense": model.diffusion.tolist()},
        "label": model.label,
    }


def dumps_model(model: SpectralModel) -> str:
    """Canonical JSON text: fixed field order, shortest round-trip floats."""
    return json.dumps(model_to_dict(model), indent=2) + "\n"


def loads_model(text: str) -> SpectralModel:
    try:
        cfg = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ModelError(f"parse error: {exc}") from None
    return model_from_dict(cfg)


def load_model(path) -> SpectralModel:
    return loads_model(Path(path).read_text())


def save_model(model: SpectralModel, path) -> None:
    Path(path).write_text(dumps_model(model))


def degeneracy(model: SpectralModel, tol: float = 1e-10) -> DegeneracyFlag:
    """Rank of Q counting eigenvalues above ``tol * max(1, ||Q||)``."""
    eigs = np.linalg.eigvalsh(model.diffusion)
    scale = max(1.0, float(np.max(np.abs(eigs))))
    rank = int(np.sum(eigs > tol * scale))
    return DegeneracyFlag(nondegenerate=rank == model.dim, rank=rank)
