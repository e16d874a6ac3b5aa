import json
import math

import numpy as np
import pytest
from scipy.integrate import quad

from oulab.dirichlet import build_degenerate, build_example
from oulab.functions import Constant, Cosine
from oulab.model import make_model
from oulab.quadrature import QuadratureSpec, gauss_hermite
from oulab.verify import (
    SCHEMA,
    VerificationError,
    convergence_csv,
    convergence_study,
    cosine_battery,
    identity_status,
    inequality_status,
    matrix_identity_check,
    matrix_identity_residuals,
    solve_and_verify,
)

PHI = Cosine([1.0, 0.5])


@pytest.fixture(scope="module")
def preset_report(preset6):
    return solve_and_verify(preset6.model, 1.0, PHI, [2, 3, 4])


def test_inequality_status():
    assert inequality_status(1.0, 2.0, 0.1) == ("pass", 1.0)
    assert inequality_status(2.0, 1.0, 0.1)[0] == "fail"
    assert inequality_status(1.05, 1.0, 0.1)[0] == "inconclusive"
    assert inequality_status(1.0, 1.0 - 1e-12, 0.0)[0] == "pass"


def test_identity_status():
    assert identity_status(1e-3, 1e-3, 1.0) == "pass"
    assert identity_status(1e-3, 1e-5, 1.0) == "fail"


def test_battery_is_fixed():
    a, b = cosine_battery(3), cosine_battery(3)
    assert len(a) == 5
    assert all(np.array_equal(x.freqs, y.freqs) for x, y in zip(a, b))


def test_constant_profile_all_pass(preset6):
    lam = 2.0
    rep = solve_and_verify(preset6.model, lam, Constant(1.0), [1, 2, 3])
    assert rep.status == "pass"
    for cell in rep.cells:
        assert cell.norms["V"][0] == pytest.approx(1 / lam, rel=1e-11)
        for key in ("DH", "DH2", "PDA"):
            assert cell.norms[key][0] == pytest.approx(0.0, abs=1e-12)
        assert all(c["status"] == "pass" for c in cell.criteria.values())


def test_scalar_cosine_against_closed_form():
    model = make_model([[-1.0]], [[1.0]])
    rep = solve_and_verify(model, 1.0, Cosine([1.0]), [1])
    cell = rep.cell(1)
    assert rep.status == "pass"
    assert cell.nu == 0.0

    def v(x):
        return quad(lambda t: math.exp(-t) * math.exp(-(1 - math.exp(-2 * t)) / 2) * math.cos(math.exp(-t) * x), 0, np.inf, epsabs=1e-14)[0]

    x, w = gauss_hermite(40, 1)
    oracle = math.sqrt(w @ np.array([v(p) ** 2 for p in x[:, 0]]))
    assert cell.norms["V"][0] == pytest.approx(oracle, rel=1e-8)


def test_preset_run(preset_report):
    rep = preset_report
    assert rep.status == "pass"
    for cell in rep.cells:
        assert cell.nu <= 0.2 + 1e-9
        assert set(cell.criteria) == {"a1", "a2", "b", "c", "d", "e"}
        assert len(cell.criteria["c"]["tests"]) == 5
        assert math.isfinite(cell.K)


def test_constants_independent_of_n(preset_report):
    bounds = {c.K_bound for c in preset_report.cells}
    assert len(bounds) == 1
    assert max(preset_report.k_stability().values()) < 0.2


def test_report_json(preset_report):
    d = json.loads(preset_report.to_json())
    assert d["schema"] == SCHEMA
    assert d["status"] == "pass"
    assert [c["n"] for c in d["cells"]] == [2, 3, 4]


def test_determinism_and_jobs(preset6):
    quad_spec = QuadratureSpec(seed=5)
    a = solve_and_verify(preset6.model, 0.5, PHI, [2, 3], quad=quad_spec).to_json()
    b = solve_and_verify(preset6.model, 0.5, PHI, [2, 3], quad=quad_spec).to_json()
    c = solve_and_verify(preset6.model, 0.5, PHI, [2, 3], quad=quad_spec, jobs=2).to_json()
    assert a == b == c


def test_lambda_doubling_halves_the_bound(preset6):
    small = solve_and_verify(preset6.model, 1.0, PHI, [2]).cell(2)
    big = solve_and_verify(preset6.model, 2.0, PHI, [2]).cell(2)
    assert big.norms["V"][0] <= small.norms["phi"][0] / 2.0
    assert big.norms["V"][0] < small.norms["V"][0]
    one = solve_and_verify(preset6.model, 1.0, Constant(1.0), [2]).cell(2)
    two = solve_and_verify(preset6.model, 2.0, Constant(1.0), [2]).cell(2)
    assert two.norms["V"][0] == pytest.approx(0.5 * one.norms["V"][0], rel=1e-11)


def test_degenerate_comparison_cells():
    m = build_degenerate()
    rep = solve_and_verify(m, 1.0, PHI, [2], eps_grid=[0.0, 0.1])
    assert rep.cell(2, 0.0).comparison
    assert not rep.cell(2, 0.1).comparison
    assert rep.cell(2, 0.1).status == "pass"
    assert rep.status == "pass"


def test_argument_errors(preset6):
    m = preset6.model
    with pytest.raises(VerificationError, match="regularization required"):
        solve_and_verify(build_degenerate(), 1.0, PHI, [2], eps_grid=[0.0])
    with pytest.raises(VerificationError, match="regularization required"):
        solve_and_verify(build_degenerate(), 1.0, PHI, [2], eps_grid=[])
    with pytest.raises(VerificationError):
        solve_and_verify(m, 0.0, PHI, [2])
    with pytest.raises(VerificationError):
        solve_and_verify(m, 1.0, PHI, [])
    with pytest.raises(VerificationError):
        solve_and_verify(m, 1.0, PHI, [1])
    with pytest.raises(VerificationError):
        solve_and_verify(m, 1.0, PHI, [7])


def test_convergence_decoupled_is_zero(preset6):
    rows = convergence_study(preset6.model, 1.0, PHI, [2, 3, 4])
    assert [(r["n_from"], r["n_to"]) for r in rows] == [(2, 3), (3, 4)]
    assert all(r["distance"] < 1e-12 for r in rows)


def test_convergence_coupled_decreases():
    rows = convergence_study(build_degenerate(), 1.0, PHI, [2, 3, 4], epsilon=0.01)
    d = [r["distance"] for r in rows]
    assert d[0] > 1e-4 and d[1] < d[0]


def test_convergence_single_rung():
    assert convergence_study(make_model([[-1.0]], [[1.0]]), 1.0, Cosine([1.0]), [1]) == []
    with pytest.raises(VerificationError):
        convergence_study(make_model([[-1.0]], [[1.0]]), 1.0, Cosine([1.0]), [1, 1])


def test_convergence_csv():
    text = convergence_csv([{"n_from": 2, "n_to": 3, "distance": 0.5, "err": 1e-9}])
    assert text == "n_from,n_to,distance,err\n2,3,0.5,1e-09\n"


def test_matrix_identity_symmetric_case(rng):
    M = rng.standard_normal((4, 4))
    M = M + M.T
    H = -0.5 * M
    C = rng.standard_normal((4, 4))
    C = C + C.T
    assert 4 * np.trace(H @ C @ H @ C) == pytest.approx(np.trace(M @ C @ M @ C), rel=1e-13)


def test_matrix_identity_scalar():
    assert matrix_identity_check(50, 1, seed=3) <= 1e-15


@pytest.mark.parametrize("dim", [1, 4, 8])
def test_matrix_identity_random(dim):
    assert matrix_identity_check(100, dim, seed=dim) < 1e-10
    assert matrix_identity_residuals(3, dim, 0).shape == (3,)


def test_matrix_identity_bad_dim():
    with pytest.raises(ValueError):
        matrix_identity_check(1, 0)
