import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from oulab.basis import BasisError, ThetaBasis, gram_schmidt_theta, project_Pn, pushforward_covariance
from oulab.covariance import covariance_infinity
from oulab.dirichlet import build_example

from conftest import random_stable_model


def test_scalar_normalization():
    b = gram_schmidt_theta(np.array([[0.5]]), seeds=[1.0])
    assert b.frame[0, 0] == pytest.approx(math.sqrt(2), rel=1e-15)
    assert b.images[0, 0] == pytest.approx(math.sqrt(2) / 2, rel=1e-15)
    assert np.allclose(pushforward_covariance(b, [[0.5]]), [[1.0]])


def test_diagonal_q_inf_gives_scaled_canonical():
    d = np.array([0.5, 2.0, 0.1, 4.0])
    b = gram_schmidt_theta(np.diag(d), n=3)
    assert np.allclose(b.frame, np.diag(1 / np.sqrt(d))[:, :3], atol=1e-15)


def test_dirichlet_frame_orthonormal(preset6):
    q_inf = covariance_infinity(preset6.model).q_inf
    b = gram_schmidt_theta(q_inf, n=4)
    assert np.max(np.abs(b.frame.T @ q_inf @ b.frame - np.eye(4))) <= 1e-12


@pytest.mark.parametrize("n", [2, 4, 8])
def test_orthonormal_on_larger_preset(n):
    q_inf = covariance_infinity(build_example(1.0, 0.5, 1.0, 10).model).q_inf
    b = gram_schmidt_theta(q_inf, n=n)
    assert np.max(np.abs(pushforward_covariance(b, q_inf) - np.eye(n))) <= 1e-10


def test_project_first_image_and_zero(preset6):
    q_inf = covariance_infinity(preset6.model).q_inf
    b = gram_schmidt_theta(q_inf, n=4)
    assert np.allclose(project_Pn(b, b.images[:, 0]), [1, 0, 0, 0], atol=1e-12)
    assert np.array_equal(project_Pn(b, np.zeros(6)), np.zeros(4))


def test_projection_norm_bessel(preset6, rng):
    q_inf = covariance_infinity(preset6.model).q_inf
    full = gram_schmidt_theta(q_inf)
    for _ in range(10):
        x = q_inf @ rng.standard_normal(6)
        h_norm2 = x @ np.linalg.solve(q_inf, x)
        coords = project_Pn(full, x)
        assert np.sum(coords**2) == pytest.approx(h_norm2, rel=1e-9)
        partial = [np.sum(coords[:k] ** 2) for k in range(1, 7)]
        assert all(a <= b + 1e-12 for a, b in zip(partial, partial[1:]))


def test_unnormalized_frame_detected(preset6):
    q_inf = covariance_infinity(preset6.model).q_inf
    b = gram_schmidt_theta(q_inf, n=3, normalize=False)
    cov = pushforward_covariance(b, q_inf)
    assert np.allclose(cov, np.diag(np.diag(cov)), atol=1e-15)
    assert not np.allclose(np.diag(cov), 1.0)


def test_dependent_seed_skipped():
    q = np.diag([1.0, 2.0, 3.0])
    seeds = np.array([[1.0, 0, 0], [2.0, 0, 0], [0, 1.0, 0]]).T
    b = gram_schmidt_theta(q, seeds=seeds, n=2)
    assert b.width == 2
    assert [e["kept"] for e in b.gram_log] == [True, False, True]


def test_insufficient_span():
    with pytest.raises(BasisError, match="insufficient seed span"):
        gram_schmidt_theta(np.eye(3), seeds=np.eye(3)[:, :2], n=3)


def test_truncate():
    b = gram_schmidt_theta(np.eye(3))
    assert b.truncate(2).width == 2
    with pytest.raises(BasisError):
        b.truncate(4)


def test_raw_frame_allowed():
    q = np.diag([0.5, 0.25])
    b = ThetaBasis(np.eye(2), q)
    assert np.array_equal(pushforward_covariance(b, q), q)


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), dim=st.integers(1, 6))
def test_gram_schmidt_properties(seed, dim):
    rng = np.random.default_rng(seed)
    q_inf = covariance_infinity(random_stable_model(rng, dim)).q_inf
    seeds = rng.standard_normal((dim, dim))
    b = gram_schmidt_theta(q_inf, seeds=seeds)
    assert np.max(np.abs(b.frame.T @ q_inf @ b.frame - np.eye(b.width))) <= 1e-10
    assert np.linalg.matrix_rank(b.frame) == b.width
    again = gram_schmidt_theta(q_inf, seeds=b.frame)
    assert np.max(np.abs(again.frame - b.frame)) <= 1e-12 * max(1.0, np.max(np.abs(b.frame)))
    kept = [e["seed"] for e in b.gram_log if e["kept"]]
    coef, *_ = np.linalg.lstsq(b.frame, seeds[:, kept], rcond=None)
    assert np.max(np.abs(b.frame @ coef - seeds[:, kept])) < 1e-10 * max(1.0, np.max(np.abs(seeds)))
