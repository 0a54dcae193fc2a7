"""Locating first-order critical points of a form on the unit sphere.

The search is a multistart heuristic: half of the random starts run Newton
directly on the Lagrange system (reaching saddles and maxima as well as
minima), the other half run projected gradient descent on ``f`` or ``-f``
followed by a Newton polish. Results are deduplicated in start order, so the
output depends only on the configuration and never on scheduling.

:func:`grid_oracle` is an independent brute-force check for ``n <= 3``.
"""
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from typing import Optional

import numpy as np

from ._errors import FormoptError
from .certify import Certificate, certify_point
from .forms import UnitPoint
from .tolerances import DEFAULT_TOLERANCES

__all__ = [
    "SearchConfig",
    "CriticalPoint",
    "DescentResult",
    "GridOracleResult",
    "descend",
    "newton_refine",
    "find_critical",
    "grid_oracle",
    "fibonacci_sphere",
]

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class SearchConfig:
    """Multistart search settings.

    ``starts=None`` means ``200 * n``. ``descent_rel_tol`` is the loose
    first-order tolerance at which descent hands over to Newton inside
    :func:`find_critical`. ``n_jobs`` only affects wall time.
    """

    starts: Optional[int] = None
    seed: int = 0
    max_iters: int = 1000
    armijo: float = 1e-4
    backtrack: float = 0.5
    min_step: float = 1e-16
    descent_rel_tol: float = 1e-6
    newton_max_iters: int = 50
    dedup_tol: float = 1e-6
    identify_antipodal: bool = True
    n_jobs: int = 1

    def __post_init__(self):
        if self.starts is not None and self.starts < 1:
            raise FormoptError("INVALID_CONFIG", "starts must be >= 1")
        if not self.dedup_tol > 0:
            raise FormoptError("INVALID_CONFIG", "dedup_tol must be positive")
        if self.max_iters < 0 or self.newton_max_iters < 1:
            raise FormoptError("INVALID_CONFIG", "iteration limits must be positive")
        if not 0 < self.backtrack < 1 or not 0 < self.armijo < 1:
            raise FormoptError("INVALID_CONFIG", "armijo and backtrack must lie in (0, 1)")
        if self.n_jobs < 1:
            raise FormoptError("INVALID_CONFIG", "n_jobs must be >= 1")

    def resolved_starts(self, n):
        return self.starts if self.starts is not None else 200 * n

    def to_dict(self):
        """Semantic settings only; ``n_jobs`` is left out so reports do not depend on it."""
        data = asdict(self)
        del data["n_jobs"]
        return data

    @classmethod
    def from_dict(cls, data):
        return cls(**{k: v for k, v in data.items() if k in cls.__dataclass_fields__})


@dataclass(frozen=True)
class CriticalPoint:
    point: UnitPoint
    cert: Certificate
    hits: int
    refined: bool

    def to_dict(self):
        return {
            "point": self.point.tolist(),
            "hits": self.hits,
            "refined": self.refined,
            "certificate": self.cert.to_dict(),
        }


@dataclass
class DescentResult:
    point: UnitPoint
    n_iter: int
    status: str  # "converged", "max_iters" or "no_descent"
    values: list = field(default_factory=list)

    @property
    def no_descent(self):
        return self.status == "no_descent"


def _residual(f, x):
    fx = f.evaluate(x)
    g = f.gradient(x)
    r = g - f.d * fx * x
    return fx, g, r


def descend(f, x0, cfg=None, tols=DEFAULT_TOLERANCES):
    """Projected gradient descent on the sphere with Armijo backtracking.

    Each step moves along ``-(grad f(x) - d f(x) x)``, which is the tangential
    part of the gradient by Euler's identity, and renormalizes. Trial steps
    start from a Barzilai-Borwein estimate. Stops once the first-order
    residual is within tolerance, after ``cfg.max_iters`` steps, or when
    backtracking underflows (``status == "no_descent"``). The objective never
    increases across accepted steps.
    """
    cfg = cfg or SearchConfig()
    p0 = x0 if isinstance(x0, UnitPoint) else UnitPoint(x0)
    if p0.n != f.n:
        raise FormoptError("DIMENSION_MISMATCH", f"point has length {p0.n}, form has n={f.n}")
    x = p0.coords
    fx, g, r = _residual(f, x)
    rn2 = float(r @ r)
    values = [float(fx)]
    t = 1.0 / (1.0 + float(np.linalg.norm(g)))
    status = "max_iters"
    k = 0
    moved = False
    for k in range(cfg.max_iters + 1):
        if math.sqrt(rn2) <= tols.fonc(float(np.linalg.norm(g))):
            status = "converged"
            break
        if k == cfg.max_iters:
            break
        noise = 1e-15 * (1.0 + abs(fx))
        while t >= cfg.min_step:
            y = x - t * r
            y = y / np.linalg.norm(y)
            fy = f.evaluate(y)
            decrease = cfg.armijo * t * rn2
            if fy <= fx - decrease or (decrease < noise and fy <= fx):
                break
            t *= cfg.backtrack
        else:
            status = "no_descent"
            break
        fy, gy, ry = _residual(f, y)
        s = y - x
        dr = ry - r
        sy = float(s @ dr)
        x, fx, g, r = y, fy, gy, ry
        rn2 = float(r @ r)
        values.append(float(fx))
        moved = True
        t = float(s @ s) / sy if sy > 0 else 2.0 * t
        t = min(max(t, 1e-12), 1e12)
    point = UnitPoint(x) if moved else p0
    return DescentResult(point=point, n_iter=k, status=status, values=values)


_SINGULAR_COND = 1e13


def newton_refine(f, x, max_iters=50):
    """Newton's method on ``(grad f(x) - 2 mu x, ||x||^2 - 1) = 0``.

    Starts from ``mu = d f(x) / 2``. Returns ``(point, True)`` once the
    first-order residual is below ``1e-12 * (1 + ||grad f||)``. When the
    Jacobian is numerically singular (a degenerate critical point) or the
    iteration does not converge, the input is returned with ``False``.
    """
    x_in = x if isinstance(x, UnitPoint) else UnitPoint(x)
    if x_in.n != f.n:
        raise FormoptError("DIMENSION_MISMATCH", f"point has length {x_in.n}, form has n={f.n}")
    n, d = f.n, f.d
    x = x_in.coords.copy()

    def converged(z):
        fz, gz, rz = _residual(f, z)
        return np.linalg.norm(rz) <= 1e-12 * (1.0 + np.linalg.norm(gz))

    if converged(x):
        return x_in, True
    mu = d * f.evaluate(x) / 2.0
    J = np.zeros((n + 1, n + 1))
    F = np.empty(n + 1)
    for _ in range(max_iters):
        g = f.gradient(x)
        H = f.hessian(x)
        F[:n] = g - 2.0 * mu * x
        F[n] = x @ x - 1.0
        J[:n, :n] = H - 2.0 * mu * np.eye(n)
        J[:n, n] = -2.0 * x
        J[n, :n] = 2.0 * x
        if not np.all(np.isfinite(J)) or np.linalg.cond(J) > _SINGULAR_COND:
            logger.debug("SINGULAR_JACOBIAN at %s", x)
            return x_in, False
        step = np.linalg.solve(J, -F)
        x = x + step[:n]
        mu = mu + step[n]
        nx = np.linalg.norm(x)
        if not np.isfinite(nx) or nx == 0.0:
            return x_in, False
        z = x / nx
        if converged(z):
            return UnitPoint(z), True
    return x_in, False


def _random_starts(n, count, seed):
    rng = np.random.default_rng(seed)
    X = rng.standard_normal((count, n))
    norms = np.linalg.norm(X, axis=1)
    X[norms == 0.0, 0] = 1.0
    return X / np.linalg.norm(X, axis=1, keepdims=True)


def _run_start(f, neg_f, x0, mode, cfg, tols):
    """One start; returns ``(coords, refined)`` or ``None`` when it fails."""
    if mode == "newton":
        p, ok = newton_refine(f, x0, cfg.newton_max_iters)
        return (p.coords, True) if ok else None
    target = f if mode == "descend" else neg_f
    loose = replace(tols, fonc_rel=cfg.descent_rel_tol, fonc_tol=None)
    res = descend(target, x0, cfg, loose)
    p, ok = newton_refine(f, res.point, cfg.newton_max_iters)
    if ok:
        return p.coords, True
    # Degenerate point: keep it unrefined if plain descent can reach tolerance.
    res = descend(target, res.point, cfg, tols)
    x = res.point.coords
    fx, g, r = _residual(f, x)
    if np.linalg.norm(r) <= tols.fonc(float(np.linalg.norm(g))):
        return x, False
    return None


def _modes(count):
    # Even starts go straight to Newton; odd starts alternate between
    # descending f (minima) and descending -f (maxima).
    return ["newton" if i % 2 == 0 else ("descend" if i % 4 == 1 else "ascend") for i in range(count)]


def find_critical(f, cfg=None, tols=DEFAULT_TOLERANCES):
    """Deduplicated, certified first-order critical points of ``f`` on the sphere.

    Returns a list of :class:`CriticalPoint` sorted by value (ties keep start
    order). For even degree and ``cfg.identify_antipodal`` the classes
    ``{x, -x}`` are merged, since ``f(-x) = f(x)``.
    """
    cfg = cfg or SearchConfig()
    count = cfg.resolved_starts(f.n)
    X0 = _random_starts(f.n, count, cfg.seed)
    modes = _modes(count)
    neg_f = -f

    def job(i):
        return _run_start(f, neg_f, X0[i], modes[i], cfg, tols)

    if cfg.n_jobs > 1:
        with ThreadPoolExecutor(max_workers=cfg.n_jobs) as pool:
            outcomes = list(pool.map(job, range(count)))
    else:
        outcomes = [job(i) for i in range(count)]

    antipodal = cfg.identify_antipodal and f.d % 2 == 0
    reps, hits, refined = [], [], []
    for out in outcomes:
        if out is None:
            continue
        x, ok = out
        for j, r in enumerate(reps):
            if np.linalg.norm(x - r) <= cfg.dedup_tol or (
                antipodal and np.linalg.norm(x + r) <= cfg.dedup_tol
            ):
                hits[j] += 1
                break
        else:
            reps.append(x)
            hits.append(1)
            refined.append(ok)

    failed = sum(out is None for out in outcomes)
    if not reps:
        logger.warning("all %d starts failed to reach a critical point", count)
    elif failed:
        logger.info("%d of %d starts failed", failed, count)

    points = []
    for x, h, ok in zip(reps, hits, refined):
        p = UnitPoint(x)
        points.append(CriticalPoint(point=p, cert=certify_point(f, p, tols), hits=h, refined=ok))
    points.sort(key=lambda cp: cp.cert.f_val)
    return points


def fibonacci_sphere(count):
    """``count`` nearly uniform points on S^2 (golden-angle spiral)."""
    i = np.arange(count) + 0.5
    z = 1.0 - 2.0 * i / count
    rho = np.sqrt(1.0 - z * z)
    phi = np.pi * (1.0 + 5.0**0.5) * i
    return np.column_stack([rho * np.cos(phi), rho * np.sin(phi), z])


@dataclass
class GridOracleResult:
    points: np.ndarray
    values: np.ndarray
    is_local_min: np.ndarray
    spacing: float

    def minima(self):
        """Discrete local minima as ``(UnitPoint, value, True)`` triples."""
        idx = np.flatnonzero(self.is_local_min)
        return [(UnitPoint(self.points[i]), float(self.values[i]), True) for i in idx]

    def to_dict(self):
        return {
            "resolution": int(self.values.size),
            "spacing": self.spacing,
            "minima": [{"point": p.tolist(), "value": v} for p, v, _ in self.minima()],
        }


def _eval_chunked(f, X, chunk=50_000):
    out = np.empty(X.shape[0])
    for s in range(0, X.shape[0], chunk):
        out[s : s + chunk] = f.evaluate(X[s : s + chunk])
    return out


def grid_oracle(f, resolution=None, k=8):
    """Brute-force local minima of ``f`` on S^1 or S^2.

    ``n == 2``: uniform angular grid (default 200000 points); a grid point is a
    minimum when it is ``<=`` both neighbours. ``n == 3``: Fibonacci grid
    (default 10**6 points); a point is a minimum when it is ``<=`` its ``k``
    nearest neighbours. Positions are accurate to the grid spacing.
    """
    if f.n == 2:
        N = int(resolution or 200_000)
        theta = 2.0 * np.pi * np.arange(N) / N
        X = np.column_stack([np.cos(theta), np.sin(theta)])
        v = _eval_chunked(f, X)
        is_min = (v <= np.roll(v, 1)) & (v <= np.roll(v, -1))
        return GridOracleResult(X, v, is_min, 2.0 * np.pi / N)
    if f.n == 3:
        from scipy.spatial import cKDTree

        N = int(resolution or 1_000_000)
        X = fibonacci_sphere(N)
        v = _eval_chunked(f, X)
        _, nbr = cKDTree(X).query(X, k=k + 1)
        is_min = np.all(v[:, None] <= v[nbr[:, 1:]], axis=1)
        return GridOracleResult(X, v, is_min, math.sqrt(4.0 * np.pi / N))
    raise FormoptError("UNSUPPORTED_DIMENSION", f"grid oracle supports n in {{2, 3}}, got n={f.n}")
