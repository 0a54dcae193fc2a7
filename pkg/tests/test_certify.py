import json
import math

import numpy as np
import pytest
from scipy.linalg import null_space

from formopt._errors import FormoptError
from formopt.certify import (
    Classification,
    bordered_det,
    certify_point,
    fonc_residual,
    lambda_pair,
    sonc_check,
    tangent_basis,
    tangent_tau,
)
from formopt.forms import Form, random_form
from formopt.search import SearchConfig, find_critical
from formopt.tolerances import ToleranceSet

from conftest import SQRT_HALF, negative_quartic, quartic, random_unit

DIAG = [SQRT_HALF, SQRT_HALF]


def tangent_oracle(H, x):
    """Tangent restriction through scipy's SVD null-space basis."""
    N = null_space(np.atleast_2d(x))
    return N.T @ H @ N


# -- fonc_residual ------------------------------------------------------------


@pytest.mark.parametrize("x", [DIAG, [1.0, 0.0]])
def test_fonc_residual_zero_at_critical(f_quartic, x):
    assert fonc_residual(f_quartic, x) <= 1e-15


def test_fonc_residual_identity_at_noncritical(f_quartic):
    x = np.array([0.6, 0.8])
    g, fx = f_quartic.gradient(x), f_quartic.evaluate(x)
    r = fonc_residual(f_quartic, x)
    assert r > 0.1
    assert r == pytest.approx(math.sqrt(g @ g - 16 * fx**2), rel=1e-12)


def test_fonc_equivalence_random():
    rng = np.random.default_rng(0)
    for seed in range(20):
        f = random_form(1 + seed % 5, 1 + seed % 6, seed=seed)
        for x in random_unit(rng, f.n, 5):
            g, fx = f.gradient(x), f.evaluate(x)
            r = fonc_residual(f, x)
            assert abs(r**2 - (g @ g - f.d**2 * fx**2)) <= 1e-8 * (1 + g @ g)


# -- tangent_tau ---------------------------------------------------------------


def test_tau_examples(f_quartic, f_negative):
    assert tangent_tau(f_negative, [0.0, 1.0]) == pytest.approx(0.0, abs=1e-14)
    assert tangent_tau(f_quartic, DIAG) == pytest.approx(6.0, rel=1e-14)


def test_tau_quadratic_eigenvectors():
    rng = np.random.default_rng(4)
    A = rng.standard_normal((4, 4))
    Q = A + A.T
    mu, V = np.linalg.eigh(Q)
    f = Form.from_quadratic(Q)
    for k in range(4):
        others = np.delete(mu, k)
        assert tangent_tau(f, V[:, k]) == pytest.approx(2 * others.min(), rel=1e-10)


def test_tau_matches_null_space_basis():
    rng = np.random.default_rng(5)
    for seed in range(10):
        f = random_form(2 + seed % 4, 3 + seed % 3, seed=seed)
        x = random_unit(rng, f.n)
        expected = np.linalg.eigvalsh(tangent_oracle(f.hessian(x), x))[0]
        assert tangent_tau(f, x) == pytest.approx(expected, abs=1e-10 * (1 + abs(expected)))


def test_tangent_basis_orthonormal():
    rng = np.random.default_rng(6)
    for n in range(2, 7):
        x = random_unit(rng, n)
        U = tangent_basis(x)
        np.testing.assert_allclose(U.T @ U, np.eye(n - 1), atol=1e-14)
        np.testing.assert_allclose(U.T @ x, 0.0, atol=1e-14)


def test_tau_empty_tangent():
    f = Form.from_terms({(3,): 2.0})
    with pytest.raises(FormoptError) as exc:
        tangent_tau(f, [1.0])
    assert exc.value.code == "EMPTY_TANGENT"


# -- lambda_pair ---------------------------------------------------------------


def test_lambda_pair_examples(f_quartic, f_negative):
    assert lambda_pair(f_negative, [0.0, 1.0]) == (-24.0, 0.0)
    assert lambda_pair(f_quartic, DIAG) == pytest.approx((6.0, 6.0), rel=1e-14)
    f = Form.from_terms({(2, 0): 1.0, (0, 2): 3.0})
    assert lambda_pair(f, [1.0, 0.0]) == pytest.approx((2.0, 6.0))


def test_lambda_pair_one_dimensional():
    f = Form.from_terms({(4,): 3.0})
    lam1, lam2 = lambda_pair(f, [1.0])
    assert lam1 == pytest.approx(36.0) and math.isinf(lam2)


# -- sonc_check ----------------------------------------------------------------


def test_sonc_examples(f_quartic, f_negative):
    assert sonc_check(f_negative, [0.0, 1.0])
    lam1, _ = lambda_pair(f_negative, [0.0, 1.0])
    assert lam1 == pytest.approx(4 * 3 * -2.0)
    assert not sonc_check(f_quartic, [1.0, 0.0])
    assert sonc_check(f_quartic, DIAG)


def test_sonc_requires_fonc(f_quartic):
    with pytest.raises(FormoptError) as exc:
        sonc_check(f_quartic, [0.6, 0.8])
    assert exc.value.code == "PRECONDITION_NOT_FONC"


def _fonc_points(f, starts=60):
    return [cp for cp in find_critical(f, SearchConfig(starts=starts, seed=1)) if cp.refined]


@pytest.mark.parametrize("n, d, seed", [(2, 3, 0), (3, 4, 1), (3, 5, 2), (4, 3, 3), (4, 4, 4)])
def test_sonc_matches_tangent_definition(n, d, seed):
    # Oracle: u^T H u >= d f(x) on the tangent space, via an independent basis.
    f = random_form(n, d, seed=seed)
    for cp in _fonc_points(f):
        x = cp.point.coords
        fx = f.evaluate(x)
        tmin = np.linalg.eigvalsh(tangent_oracle(f.hessian(x), x))[0]
        margin = tmin - d * fx
        if abs(margin) > 1e-6:
            assert sonc_check(f, x) == (margin > 0)


@pytest.mark.parametrize("n, d, seed", [(2, 3, 5), (3, 4, 6), (4, 5, 7), (3, 3, 8)])
def test_eigen_characterization_identities(n, d, seed):
    f = random_form(n, d, seed=seed)
    for cp in _fonc_points(f):
        c = cp.cert
        scale = 1 + abs(c.f_val)
        assert abs(c.lambda1 - min(d * (d - 1) * c.f_val, c.tau)) <= 1e-6 * scale
        if c.tau > c.lambda1 + c.eig_tol and abs(c.tau - c.lambda2) <= c.eig_tol:
            assert abs(c.lambda1 - d * (d - 1) * c.f_val) <= 1e-6 * scale
        if c.classification.passes_sonc and c.f_val < 0:
            assert abs(c.lambda1 - d * (d - 1) * c.f_val) <= 1e-6 * scale


# -- bordered_det --------------------------------------------------------------


def test_bordered_det_examples(f_quartic, f_negative):
    assert bordered_det(f_quartic, DIAG) == pytest.approx(-4.0, rel=1e-13)
    assert bordered_det(f_negative, [0.0, 1.0]) == pytest.approx(-8.0, rel=1e-13)
    assert bordered_det(f_quartic, DIAG) == bordered_det(f_quartic, DIAG)


def test_bordered_det_is_tangent_determinant():
    rng = np.random.default_rng(8)
    for seed in range(10):
        f = random_form(2 + seed % 4, 3 + seed % 3, seed=seed)
        x = random_unit(rng, f.n)
        M = f.hessian(x) - f.d * f.evaluate(x) * np.eye(f.n)
        expected = -np.linalg.det(tangent_oracle(M, x))
        assert bordered_det(f, x) == pytest.approx(expected, rel=1e-9, abs=1e-12)


# -- certify_point -------------------------------------------------------------


def test_certify_examples(f_quartic, f_negative):
    c = certify_point(f_quartic, DIAG)
    assert c.classification is Classification.STRICT_LOCAL_MIN
    assert c.det_bordered == pytest.approx(-4.0)
    assert c.multiplier == pytest.approx(-1.0)
    assert certify_point(f_quartic, [1.0, 0.0]).classification is Classification.FONC_NOT_SONC
    assert certify_point(f_quartic, [0.6, 0.8]).classification is Classification.NOT_FONC
    c = certify_point(f_negative, [0.0, 1.0])
    assert c.classification is Classification.STRICT_LOCAL_MIN
    assert (c.lambda1, c.lambda2) == (-24.0, 0.0)


def test_certificate_invariants():
    rng = np.random.default_rng(9)
    for seed in range(8):
        f = random_form(2 + seed % 3, 3 + seed % 3, seed=seed)
        pts = [cp.point for cp in _fonc_points(f, 30)] + list(random_unit(rng, f.n, 5))
        for x in pts:
            c = certify_point(f, x)
            assert c.lambda1 <= c.lambda2
            assert c.tau >= c.lambda1 - c.eig_tol
            if c.classification is not Classification.NOT_FONC:
                assert c.fonc_residual <= c.fonc_tol
            if c.classification is Classification.STRICT_LOCAL_MIN:
                assert abs(c.det_bordered) > c.det_tol


def test_quadratic_form_single_minimum():
    rng = np.random.default_rng(10)
    for _ in range(10):
        A = rng.standard_normal((5, 5))
        Q = A + A.T
        mu, V = np.linalg.eigh(Q)
        f = Form.from_quadratic(Q)
        labels = [certify_point(f, V[:, k]).classification for k in range(5)]
        assert labels[0] is Classification.STRICT_LOCAL_MIN
        assert all(lab is Classification.FONC_NOT_SONC for lab in labels[1:])
        assert certify_point(f, -V[:, 0]).classification is Classification.STRICT_LOCAL_MIN


def test_degenerate_sonc():
    # (x1^2 + x2^2)^2 is constant on the circle: every point is critical,
    # the second-order test is tight and the determinant vanishes.
    f = Form.from_terms({(4, 0): 1.0, (2, 2): 2.0, (0, 4): 1.0})
    c = certify_point(f, [0.6, 0.8])
    assert c.classification is Classification.DEGENERATE_SONC
    assert abs(c.det_bordered) <= c.det_tol


def test_even_degree_antipodal_consistency():
    f = random_form(3, 4, seed=12)
    rng = np.random.default_rng(12)
    for x in [cp.point.coords for cp in _fonc_points(f, 30)] + list(random_unit(rng, 3, 5)):
        a, b = certify_point(f, x), certify_point(f, -x)
        assert a.classification == b.classification
        for k in ("f_val", "grad_norm", "fonc_residual", "lambda1", "lambda2", "tau", "det_bordered"):
            assert getattr(a, k) == pytest.approx(getattr(b, k), abs=1e-12)


def test_near_zero_flag():
    f = Form.from_terms({(2, 2): 1.0})
    c = certify_point(f, [1.0, 0.0])
    assert c.f_near_zero_flag and c.f_val == 0.0
    assert c.classification is Classification.STRICT_LOCAL_MIN


def test_one_dimensional_points_are_isolated_minima():
    f = Form.from_terms({(3,): 2.0})
    for x in ([1.0], [-1.0]):
        c = certify_point(f, x)
        assert c.classification is Classification.STRICT_LOCAL_MIN
        assert math.isinf(c.tau)


def test_absolute_tolerance_overrides(f_quartic):
    x = [0.7071067, 0.7071068]
    x = np.array(x) / np.linalg.norm(x)
    assert certify_point(f_quartic, x).classification is Classification.NOT_FONC
    loose = ToleranceSet(fonc_tol=1e-6)
    assert certify_point(f_quartic, x, loose).classification is Classification.STRICT_LOCAL_MIN


def test_certificate_json_fields(f_quartic):
    d = certify_point(f_quartic, DIAG).to_dict()
    assert set(d) == {
        "point", "f_val", "grad_norm", "fonc_residual", "lambda1", "lambda2", "tau",
        "det_bordered", "multiplier", "classification", "f_near_zero_flag",
    }
    assert json.loads(json.dumps(d))["classification"] == "StrictLocalMin"
    one = certify_point(Form.from_terms({(3,): 1.0}), [1.0]).to_dict()
    assert one["tau"] is None and one["lambda2"] is None
