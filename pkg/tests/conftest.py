import numpy as np
import pytest

from oulab.dirichlet import build_example
from oulab.model import make_model


def random_stable_model(rng, dim, degenerate=False):
    """Contractive drift (negative definite symmetric part plus skew) and a PSD diffusion."""
    G = rng.standard_normal((dim, dim))
    S = rng.standard_normal((dim, dim))
    A = -(G @ G.T / dim + 0.5 * np.eye(dim)) + 0.7 * (S - S.T)
    R = rng.standard_normal((dim, dim))
    Q = R @ R.T / dim
    if not degenerate:
        Q += 0.1 * np.eye(dim)
    return make_model(A, Q, label=f"random dim={dim}")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def preset6():
    return build_example(1.0, 0.5, 1.0, 6)


@pytest.fixture(scope="session")
def scalar_model():
    return make_model([[-1.0]], [[1.0]], label="scalar")


def random_symmetric(rng, n):
    C = rng.standard_normal((n, n))
    return C + C.T
