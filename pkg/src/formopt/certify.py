"""Point-level optimality tests on the unit sphere.

For a degree-``d`` form ``f`` and a unit vector ``x`` the tests only need
``f(x)``, ``||grad f(x)||`` and the two smallest Hessian eigenvalues:

* first order: ``grad f(x) = d f(x) x``, i.e. ``||grad f(x)|| = d |f(x)|``;
* second order (``d > 2``): ``lambda_1 >= d f(x)`` when ``f(x) >= 0`` and
  ``lambda_2 >= d f(x)`` when ``f(x) < 0``;
* strictness: the bordered determinant of ``[H - d f I, x; x^T, 0]`` is
  nonzero.
"""
import logging
import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from ._errors import FormoptError
from .forms import UnitPoint, as_unit_point
from .tolerances import DEFAULT_TOLERANCES

__all__ = [
    "Classification",
    "Certificate",
    "fonc_residual",
    "tangent_basis",
    "tangent_tau",
    "lambda_pair",
    "sonc_margin",
    "sonc_check",
    "bordered_det",
    "certify_point",
]

logger = logging.getLogger(__name__)


class Classification(str, Enum):
    LOCAL_MIN = "LocalMin"
    STRICT_LOCAL_MIN = "StrictLocalMin"
    NOT_FONC = "NotFONC"
    FONC_NOT_SONC = "FONCNotSONC"
    DEGENERATE_SONC = "DegenerateSONC"

    def __str__(self):
        return self.value

    @property
    def is_minimum(self):
        return self in (Classification.LOCAL_MIN, Classification.STRICT_LOCAL_MIN)

    @property
    def passes_sonc(self):
        return self in (
            Classification.LOCAL_MIN,
            Classification.STRICT_LOCAL_MIN,
            Classification.DEGENERATE_SONC,
        )


def _finite_or_none(v):
    return None if not math.isfinite(v) else float(v)


@dataclass(frozen=True)
class Certificate:
    """Diagnostics of one sphere point.

    ``classification`` is :attr:`Classification.LOCAL_MIN` only in the
    generic regime: second-order necessary conditions hold with margin but
    the bordered determinant is numerically zero. For non-generic forms that
    label can be wrong.
    """

    point: UnitPoint
    f_val: float
    grad_norm: float
    fonc_residual: float
    lambda1: float
    lambda2: float
    tau: float
    det_bordered: float
    multiplier: float
    classification: Classification
    f_near_zero_flag: bool
    fonc_tol: float
    eig_tol: float
    det_tol: float

    @property
    def is_minimum(self):
        return self.classification.is_minimum

    def to_dict(self):
        return {
            "point": self.point.tolist(),
            "f_val": float(self.f_val),
            "grad_norm": float(self.grad_norm),
            "fonc_residual": float(self.fonc_residual),
            "lambda1": _finite_or_none(self.lambda1),
            "lambda2": _finite_or_none(self.lambda2),
            "tau": _finite_or_none(self.tau),
            "det_bordered": float(self.det_bordered),
            "multiplier": float(self.multiplier),
            "classification": self.classification.value,
            "f_near_zero_flag": bool(self.f_near_zero_flag),
        }


def _unit(f, x):
    x = as_unit_point(x)
    if x.n != f.n:
        raise FormoptError("DIMENSION_MISMATCH", f"point has length {x.n}, form has n={f.n}")
    return x.coords


def fonc_residual(f, x):
    """``||grad f(x) - d f(x) x||``; zero exactly at first-order critical points."""
    x = _unit(f, x)
    return float(np.linalg.norm(f.gradient(x) - f.d * f.evaluate(x) * x))


def tangent_basis(x):
    """Orthonormal basis of the complement of unit vector ``x``, shape ``(n, n-1)``.

    Columns 2..n of the Householder reflection that maps ``e_1`` onto ``+-x``.
    """
    x = np.asarray(x, dtype=float)
    n = x.size
    v = x.copy()
    v[0] += 1.0 if x[0] >= 0 else -1.0
    P = np.eye(n) - 2.0 * np.outer(v, v) / (v @ v)
    return P[:, 1:]


def _tau(H, x):
    U = tangent_basis(x)
    T = U.T @ H @ U
    return float(np.linalg.eigvalsh(0.5 * (T + T.T))[0])


def tangent_tau(f, x):
    """Minimum of ``u^T H u`` over unit ``u`` orthogonal to ``x``."""
    x = _unit(f, x)
    if f.n == 1:
        raise FormoptError("EMPTY_TANGENT", "tangent space of S^0 is empty")
    return _tau(f.hessian(x), x)


def _pair(H):
    ev = np.linalg.eigvalsh(H)
    return float(ev[0]), (float(ev[1]) if ev.size > 1 else math.inf)


def lambda_pair(f, x):
    """The two smallest Hessian eigenvalues; ``(h, inf)`` when ``n == 1``."""
    x = _unit(f, x)
    return _pair(f.hessian(x))


def _bordered(H, x, fx, d):
    n = x.size
    B = np.zeros((n + 1, n + 1))
    B[:n, :n] = H - d * fx * np.eye(n)
    B[:n, n] = x
    B[n, :n] = x
    return float(np.linalg.det(B))


def bordered_det(f, x):
    """``det [[H - d f(x) I, x], [x^T, 0]]``."""
    x = _unit(f, x)
    return _bordered(f.hessian(x), x, f.evaluate(x), f.d)


def _sonc_margin(lam1, lam2, fx, d, n):
    # S^0 has no tangent directions: second-order conditions hold vacuously.
    if n == 1:
        return math.inf
    # Quadratic forms: the x-direction eigenvalue equals d f(x), so only the
    # lambda_1 rule is valid.
    if d <= 2 or fx >= 0:
        return lam1 - d * fx
    return lam2 - d * fx


def sonc_margin(f, x):
    """Signed slack of the eigenvalue form of the second-order condition."""
    x = _unit(f, x)
    lam1, lam2 = _pair(f.hessian(x))
    return _sonc_margin(lam1, lam2, float(f.evaluate(x)), f.d, f.n)


def sonc_check(f, x, tols=DEFAULT_TOLERANCES):
    """Second-order necessary condition at a first-order critical point.

    Raises ``PRECONDITION_NOT_FONC`` when ``x`` is not first-order critical.
    """
    x = _unit(f, x)
    fx = float(f.evaluate(x))
    g = f.gradient(x)
    res = float(np.linalg.norm(g - f.d * fx * x))
    if res > tols.fonc(float(np.linalg.norm(g))):
        raise FormoptError("PRECONDITION_NOT_FONC", f"first-order residual {res:.3e} exceeds tolerance")
    H = f.hessian(x)
    lam1, lam2 = _pair(H)
    eig_tol = tols.eig(float(np.abs(H).max()))
    ok = _sonc_margin(lam1, lam2, fx, f.d, f.n) >= -eig_tol
    _check_negative_branch(ok, lam1, fx, f.d, f.n, eig_tol)
    return ok


def _check_negative_branch(ok, lam1, fx, d, n, eig_tol):
    if ok and fx < 0 and d > 2 and n > 1:
        expected = d * (d - 1) * fx
        if abs(lam1 - expected) > eig_tol * (1.0 + abs(fx)):
            logger.warning(
                "lambda_1 = %.12g differs from d(d-1)f = %.12g at a negative critical point",
                lam1,
                expected,
            )


def certify_point(f, x, tols=DEFAULT_TOLERANCES):
    """Compute every diagnostic at ``x`` and classify the point.

    Rules, applied in order: ``NotFONC`` when the first-order residual exceeds
    its tolerance; ``FONCNotSONC`` when the second-order test fails;
    ``StrictLocalMin`` when the bordered determinant is nonzero;
    ``DegenerateSONC`` when the second-order inequality is tight;
    otherwise ``LocalMin``.
    """
    p = as_unit_point(x)
    x = _unit(f, p)
    n, d = f.n, f.d
    fx = float(f.evaluate(x))
    g = f.gradient(x)
    H = f.hessian(x)
    grad_norm = float(np.linalg.norm(g))
    res = float(np.linalg.norm(g - d * fx * x))
    lam1, lam2 = _pair(H)
    tau = _tau(H, x) if n > 1 else math.inf
    det = _bordered(H, x, fx, d)
    hmax = float(np.abs(H).max())
    fonc_tol, eig_tol, det_tol = tols.fonc(grad_norm), tols.eig(hmax), tols.det(hmax, n)

    margin = _sonc_margin(lam1, lam2, fx, d, n)
    if res > fonc_tol:
        cls = Classification.NOT_FONC
    elif margin < -eig_tol:
        cls = Classification.FONC_NOT_SONC
    elif abs(det) > det_tol:
        cls = Classification.STRICT_LOCAL_MIN
    elif margin <= eig_tol:
        cls = Classification.DEGENERATE_SONC
    else:
        cls = Classification.LOCAL_MIN
    if cls.passes_sonc:
        _check_negative_branch(True, lam1, fx, d, n, eig_tol)

    return Certificate(
        point=p,
        f_val=fx,
        grad_norm=grad_norm,
        fonc_residual=res,
        lambda1=lam1,
        lambda2=lam2,
        tau=tau,
        det_bordered=det,
        multiplier=-d * fx / 2.0,
        classification=cls,
        f_near_zero_flag=abs(fx) <= eig_tol,
        fonc_tol=fonc_tol,
        eig_tol=eig_tol,
        det_tol=det_tol,
    )
