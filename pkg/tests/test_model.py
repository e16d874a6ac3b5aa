import json
import warnings

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.linalg import expm

from oulab.dirichlet import build_example
from oulab.model import (
    ContractionWarning,
    ModelError,
    degeneracy,
    dumps_model,
    load_model,
    loads_model,
    make_model,
    model_from_dict,
    save_model,
)

from conftest import random_stable_model


def test_scalar_config_loads(tmp_path):
    p = tmp_path / "m.json"
    p.write_text(json.dumps({"dim": 1, "drift": {"dense": [[-1]]}, "diffusion": {"dense": [[1]]}}))
    m = load_model(p)
    assert m.dim == 1
    assert m.A[0, 0] == -1.0 and m.Q[0, 0] == 1.0


def test_dirichlet_file_loads(tmp_path):
    cfg = {
        "dim": 6,
        "drift": {"diag": [-(np.pi * i) ** 2 for i in range(1, 7)]},
        "diffusion": {"block2": {"q1": 1, "q2": 0.5, "q3": 1, "tail": "identity"}},
        "label": "dirichlet",
    }
    p = tmp_path / "d.json"
    p.write_text(json.dumps(cfg))
    m = load_model(p)
    assert np.allclose(np.diag(m.A), [-(np.pi * i) ** 2 for i in range(1, 7)])
    assert np.array_equal(m.Q[:2, :2], [[1, 0.5], [0.5, 1]])
    assert np.array_equal(m.Q[2:, 2:], np.eye(4))
    assert degeneracy(m).nondegenerate


def test_expanding_drift_rejected():
    with pytest.raises(ModelError, match="contraction check failed"):
        make_model([[1.0]], [[1.0]])


def test_hurwitz_noncontractive_warns():
    A = [[-1.0, 10.0], [0.0, -1.0]]
    with pytest.warns(ContractionWarning):
        make_model(A, np.eye(2))


def test_dimension_mismatch():
    with pytest.raises(ModelError, match="dimension mismatch"):
        model_from_dict({"dim": 2, "drift": {"diag": [-1, -2]}, "diffusion": {"dense": [[1]]}})


def test_asymmetric_diffusion_rejected():
    with pytest.raises(ModelError, match="not symmetric"):
        make_model(-np.eye(2), [[1.0, 0.2], [0.0, 1.0]])


def test_tiny_asymmetry_symmetrized():
    m = make_model(-np.eye(2), [[1.0, 0.2 + 1e-15], [0.2, 1.0]])
    assert np.array_equal(m.Q, m.Q.T)


def test_indefinite_diffusion_rejected():
    with pytest.raises(ModelError, match="positive semidefinite"):
        make_model(-np.eye(2), [[1.0, 2.0], [2.0, 1.0]])


def test_parse_error():
    with pytest.raises(ModelError, match="parse error"):
        loads_model("{not json")


def test_missing_field():
    with pytest.raises(ModelError, match="missing field"):
        model_from_dict({"dim": 1, "drift": {"dense": [[-1]]}})


@pytest.mark.parametrize(
    "Q, expected",
    [(np.eye(3), (True, 3)), (np.diag([1.0, 1.0, 0.0]), (False, 2))],
)
def test_degeneracy(Q, expected):
    flag = degeneracy(make_model(-np.eye(3), Q))
    assert (flag.nondegenerate, flag.rank) == expected


def test_model_is_immutable(scalar_model):
    with pytest.raises(ValueError):
        scalar_model.A[0, 0] = 3.0


def test_roundtrip_is_byte_identical(tmp_path, preset6):
    text = dumps_model(preset6.model)
    again = dumps_model(loads_model(text))
    assert text == again
    p = tmp_path / "m.json"
    save_model(preset6.model, p)
    assert p.read_text() == text


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), dim=st.integers(1, 6))
def test_roundtrip_random(seed, dim):
    m = random_stable_model(np.random.default_rng(seed), dim)
    text = dumps_model(m)
    m2 = loads_model(text)
    assert np.array_equal(m2.A, m.A) and np.array_equal(m2.Q, m.Q)
    assert dumps_model(m2) == text


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), dim=st.integers(1, 6))
def test_semigroup_is_contractive(seed, dim):
    m = random_stable_model(np.random.default_rng(seed), dim)
    for t in (0.1, 1.0, 10.0):
        assert np.linalg.norm(expm(t * m.A), 2) <= 1 + 1e-8


def test_preset_semigroup_contractive(preset6):
    for t in (0.1, 1.0, 10.0):
        assert np.linalg.norm(expm(t * preset6.model.A), 2) <= 1 + 1e-8
