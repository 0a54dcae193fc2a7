"""Homogeneous polynomials (forms): storage, calculus and random generation.

A :class:`Form` is stored sparsely as a map from exponent multi-index to
coefficient. Derivatives are obtained by differentiating each monomial
symbolically and then evaluating, so gradients and Hessians are exact up to
floating point round-off. All evaluation routines accept either a single
point of shape ``(n,)`` or a batch of shape ``(..., n)``.
"""
import itertools
import json
import re
from functools import cached_property
from pathlib import Path

import numpy as np

from ._errors import FormoptError

__all__ = [
    "Form",
    "UnitPoint",
    "as_unit_point",
    "monomials",
    "evaluate",
    "gradient",
    "hessian",
    "eval_g",
    "grad_g",
    "random_form",
    "load_form",
    "dump_form",
]


def monomials(n, d):
    """All exponent tuples of length ``n`` and total degree ``d``.

    Returned in graded lexicographic order with ``x_1 > x_2 > ... > x_n``,
    e.g. for ``n=2, d=2``: ``(2, 0), (1, 1), (0, 2)``.
    """
    out = []
    for combo in itertools.combinations_with_replacement(range(n), d):
        alpha = [0] * n
        for i in combo:
            alpha[i] += 1
        out.append(tuple(alpha))
    return sorted(out, reverse=True)


class Form:
    """Degree-``d`` homogeneous polynomial in ``n`` variables.

    Parameters
    ----------
    n : int
        Number of variables.
    d : int
        Degree; every stored monomial has total degree exactly ``d``.
    terms : mapping or iterable of pairs
        Exponent tuple -> coefficient. Repeated exponents are summed and
        exact zeros are dropped.

    Instances are immutable; derivative tables are built lazily on first use.
    """

    def __init__(self, n, d, terms):
        n, d = int(n), int(d)
        if n < 1:
            raise FormoptError("INVALID_FORM", f"n must be >= 1, got {n}")
        if d < 1:
            raise FormoptError("INVALID_FORM", f"d must be >= 1, got {d}")
        pairs = terms.items() if hasattr(terms, "items") else terms
        merged = {}
        for alpha, c in pairs:
            alpha = tuple(int(a) for a in alpha)
            if len(alpha) != n:
                raise FormoptError(
                    "DIMENSION_MISMATCH", f"exponent {alpha} has length {len(alpha)}, expected {n}"
                )
            if any(a < 0 for a in alpha):
                raise FormoptError("INVALID_FORM", f"negative exponent in {alpha}")
            if sum(alpha) != d:
                raise FormoptError(
                    "FORM_NOT_HOMOGENEOUS", f"exponent {alpha} has degree {sum(alpha)}, expected {d}"
                )
            c = float(c)
            if not np.isfinite(c):
                raise FormoptError("INVALID_FORM", f"non-finite coefficient for {alpha}")
            merged[alpha] = merged.get(alpha, 0.0) + c
        self._n = n
        self._d = d
        self._terms = tuple(
            (alpha, merged[alpha]) for alpha in sorted(merged, reverse=True) if merged[alpha] != 0.0
        )

    @property
    def n(self):
        return self._n

    @property
    def d(self):
        return self._d

    @property
    def terms(self):
        """Coefficients as a fresh ``{alpha: c}`` dict in canonical order."""
        return dict(self._terms)

    def __len__(self):
        return len(self._terms)

    def __eq__(self, other):
        if not isinstance(other, Form):
            return NotImplemented
        return (self.n, self.d, self._terms) == (other.n, other.d, other._terms)

    def __hash__(self):
        return hash((self.n, self.d, self._terms))

    def __repr__(self):
        return f"Form(n={self.n}, d={self.d}, terms={len(self)})"

    def __str__(self):
        if not self._terms:
            return "0"
        parts = []
        for alpha, c in self._terms:
            mono = "*".join(
                f"x{i + 1}" if a == 1 else f"x{i + 1}^{a}" for i, a in enumerate(alpha) if a
            )
            parts.append(f"{c:+.6g}*{mono}")
        return " ".join(parts)

    def __neg__(self):
        return self.scale(-1.0)

    def scale(self, factor):
        return Form(self.n, self.d, {a: factor * c for a, c in self._terms})

    @classmethod
    def from_terms(cls, terms):
        """Build a form inferring ``n`` and ``d`` from the first exponent."""
        terms = dict(terms)
        if not terms:
            raise FormoptError("INVALID_FORM", "cannot infer n and d from an empty term map")
        first = next(iter(terms))
        return cls(len(first), sum(first), terms)

    @classmethod
    def from_quadratic(cls, Q):
        """The quadratic form ``x^T Q x`` (``Q`` is symmetrized)."""
        Q = np.asarray(Q, dtype=float)
        if Q.ndim != 2 or Q.shape[0] != Q.shape[1]:
            raise FormoptError("INVALID_FORM", "Q must be a square matrix")
        Q = 0.5 * (Q + Q.T)
        n = Q.shape[0]
        terms = {}
        for i in range(n):
            for j in range(i, n):
                alpha = [0] * n
                alpha[i] += 1
                alpha[j] += 1
                terms[tuple(alpha)] = Q[i, i] if i == j else 2.0 * Q[i, j]
        return cls(n, 2, terms)

    # -- derivative tables -------------------------------------------------

    @cached_property
    def _exps(self):
        if not self._terms:
            return np.zeros((1, self.n), dtype=np.int64)
        return np.array([a for a, _ in self._terms], dtype=np.int64)

    @cached_property
    def _coefs(self):
        if not self._terms:
            return np.zeros(1)
        return np.array([c for _, c in self._terms])

    @cached_property
    def _grad_tables(self):
        exps, coefs = self._exps, self._coefs
        gexps = np.empty((self.n,) + exps.shape, dtype=np.int64)
        gcoefs = np.empty((self.n, exps.shape[0]))
        for i in range(self.n):
            ai = exps[:, i]
            gcoefs[i] = coefs * ai
            e = exps.copy()
            e[:, i] = np.maximum(ai - 1, 0)
            gexps[i] = e
        return gexps, gcoefs

    @cached_property
    def _hess_tables(self):
        exps, coefs = self._exps, self._coefs
        pairs = [(i, j) for i in range(self.n) for j in range(i, self.n)]
        hexps = np.empty((len(pairs),) + exps.shape, dtype=np.int64)
        hcoefs = np.empty((len(pairs), exps.shape[0]))
        for p, (i, j) in enumerate(pairs):
            e = exps.copy()
            if i == j:
                factor = exps[:, i] * (exps[:, i] - 1)
                e[:, i] = np.maximum(e[:, i] - 2, 0)
            else:
                factor = exps[:, i] * exps[:, j]
                e[:, i] = np.maximum(e[:, i] - 1, 0)
                e[:, j] = np.maximum(e[:, j] - 1, 0)
            hcoefs[p] = coefs * factor
            hexps[p] = e
        rows = np.array([i for i, _ in pairs], dtype=np.intp)
        cols = np.array([j for _, j in pairs], dtype=np.intp)
        return hexps, hcoefs, rows, cols

    # -- evaluation --------------------------------------------------------

    def _check(self, x):
        x = np.asarray(x, dtype=float)
        if x.ndim == 0 or x.shape[-1] != self.n:
            raise FormoptError(
                "DIMENSION_MISMATCH", f"point has shape {x.shape}, expected trailing dimension {self.n}"
            )
        return x

    def __call__(self, x):
        return self.evaluate(x)

    def _powers(self, x):
        # x_i ** k for k = 0..d, shape (..., n, d + 1).
        pw = np.empty(x.shape + (self.d + 1,))
        pw[..., 0] = 1.0
        for k in range(1, self.d + 1):
            pw[..., k] = pw[..., k - 1] * x
        return pw

    def _monomials(self, pw, exps):
        return np.prod(pw[..., self._cols, exps], axis=-1)

    @cached_property
    def _cols(self):
        return np.arange(self.n)

    def evaluate(self, x):
        x = self._check(x)
        mono = self._monomials(self._powers(x), self._exps)
        return (mono * self._coefs).sum(axis=-1)

    def gradient(self, x):
        x = self._check(x)
        gexps, gcoefs = self._grad_tables
        mono = self._monomials(self._powers(x), gexps)
        return (mono * gcoefs).sum(axis=-1)

    def hessian(self, x):
        """Symmetric matrix of second partials; filled from the upper triangle."""
        x = self._check(x)
        hexps, hcoefs, rows, cols = self._hess_tables
        mono = self._monomials(self._powers(x), hexps)
        upper = (mono * hcoefs).sum(axis=-1)
        H = np.empty(x.shape[:-1] + (self.n, self.n))
        H[..., rows, cols] = upper
        H[..., cols, rows] = upper
        return H

    def eval_g(self, x):
        """``g(x) = f(x) * (1 - d/(d+2) * ||x||^2)``; equals ``2 f(x)/(d+2)`` on the sphere."""
        x = self._check(x)
        r2 = (x * x).sum(axis=-1)
        return self.evaluate(x) * (1.0 - self.d / (self.d + 2.0) * r2)

    def grad_g(self, x):
        """Gradient of :meth:`eval_g`, in closed form.

        ``grad g(x) = grad f(x) (1 - d/(d+2) ||x||^2) - 2d/(d+2) f(x) x``.
        Its zeros on the sphere are exactly the points where
        ``grad f(x) = d f(x) x``.
        """
        x = self._check(x)
        d = self.d
        r2 = (x * x).sum(axis=-1)[..., None]
        fx = self.evaluate(x)[..., None]
        return self.gradient(x) * (1.0 - d / (d + 2.0) * r2) - (2.0 * d / (d + 2.0)) * fx * x

    # -- serialization -----------------------------------------------------

    def to_dict(self):
        return {
            "n": self.n,
            "d": self.d,
            "terms": [{"alpha": list(alpha), "c": c} for alpha, c in self._terms],
        }

    @classmethod
    def from_dict(cls, data):
        if not isinstance(data, dict):
            raise FormoptError("INVALID_FORM", "form document must be a JSON object")
        for key in ("n", "d", "terms"):
            if key not in data:
                raise FormoptError("INVALID_FORM", f"missing field '{key}'")
        n, d, raw = data["n"], data["d"], data["terms"]
        for key, value in (("n", n), ("d", d)):
            if isinstance(value, bool) or not isinstance(value, int):
                raise FormoptError("INVALID_FORM", f"field '{key}' must be an integer")
        if not isinstance(raw, list):
            raise FormoptError("INVALID_FORM", "field 'terms' must be a list")
        pairs = []
        for k, term in enumerate(raw):
            if not isinstance(term, dict) or "alpha" not in term or "c" not in term:
                raise FormoptError("INVALID_FORM", f"terms[{k}] must have fields 'alpha' and 'c'")
            alpha, c = term["alpha"], term["c"]
            if not isinstance(alpha, list) or not all(
                isinstance(a, int) and not isinstance(a, bool) for a in alpha
            ):
                raise FormoptError("INVALID_FORM", f"terms[{k}].alpha must be a list of integers")
            if isinstance(c, bool) or not isinstance(c, (int, float)):
                raise FormoptError("INVALID_FORM", f"terms[{k}].c must be a number")
            pairs.append((alpha, c))
        return cls(n, d, pairs)

    def to_json(self, **kwargs):
        return json.dumps(self.to_dict(), **kwargs)

    @classmethod
    def from_json(cls, text):
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise FormoptError("INVALID_FORM", f"malformed JSON: {exc}") from None
        return cls.from_dict(data)


def load_form(path):
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise FormoptError("INVALID_FORM", f"cannot read form file {path}: {exc.strerror}") from None
    return Form.from_json(text)


def dump_form(form, path=None, indent=None):
    text = form.to_json(indent=indent)
    if path is not None:
        Path(path).write_text(text + "\n")
    return text


# Module-level aliases mirroring the method API.
def evaluate(f, x):
    return f.evaluate(x)


def gradient(f, x):
    return f.gradient(x)


def hessian(f, x):
    return f.hessian(x)


def eval_g(f, x):
    return f.eval_g(x)


def grad_g(f, x):
    return f.grad_g(x)


_SPARSE = re.compile(r"^sparse\s*[:(]\s*(\d+)\s*\)?$")


def random_form(n, d, seed=0, scheme="gaussian"):
    """Random form with standard normal coefficients.

    ``scheme="gaussian"`` draws every monomial of degree ``d``;
    ``scheme="sparse:k"`` (or ``"sparse(k)"``) draws ``k`` distinct monomials
    uniformly. The result depends only on ``(n, d, seed, scheme)``.
    """
    monos = monomials(n, d)
    rng = np.random.default_rng(seed)
    if scheme == "gaussian":
        chosen = monos
    else:
        m = _SPARSE.match(str(scheme).strip())
        if m is None:
            raise FormoptError("INVALID_CONFIG", f"unknown scheme {scheme!r}")
        k = int(m.group(1))
        if k < 1:
            raise FormoptError("INVALID_CONFIG", "sparse scheme needs k >= 1")
        idx = np.sort(rng.choice(len(monos), size=min(k, len(monos)), replace=False))
        chosen = [monos[i] for i in idx]
    coefs = rng.standard_normal(len(chosen))
    return Form(n, d, zip(chosen, coefs))


class UnitPoint:
    """A point on the unit sphere; the constructor renormalizes explicitly."""

    __slots__ = ("_coords",)

    def __init__(self, coords):
        x = np.array(coords, dtype=float).reshape(-1)
        if x.size == 0 or not np.all(np.isfinite(x)):
            raise FormoptError("INVALID_POINT", "point must be a non-empty finite vector")
        norm = np.linalg.norm(x)
        if norm == 0.0:
            raise FormoptError("INVALID_POINT", "cannot normalize the zero vector")
        if norm != 1.0:
            x = x / norm
        x.setflags(write=False)
        self._coords = x

    @property
    def coords(self):
        return self._coords

    @property
    def n(self):
        return self._coords.size

    def __array__(self, dtype=None, copy=None):
        return self._coords if dtype is None else self._coords.astype(dtype)

    def __len__(self):
        return self._coords.size

    def __neg__(self):
        return UnitPoint(-self._coords)

    def __eq__(self, other):
        if not isinstance(other, UnitPoint):
            return NotImplemented
        return np.array_equal(self._coords, other._coords)

    def __hash__(self):
        return hash(self._coords.tobytes())

    def __repr__(self):
        return f"UnitPoint({self._coords.tolist()})"

    def tolist(self):
        return self._coords.tolist()


def as_unit_point(x, tol=1e-8):
    """Coerce ``x`` to a :class:`UnitPoint`, refusing points far off the sphere."""
    if isinstance(x, UnitPoint):
        return x
    x = np.asarray(x, dtype=float).reshape(-1)
    norm = np.linalg.norm(x)
    if not abs(norm - 1.0) <= tol:
        raise FormoptError("NOT_NORMALIZED", f"|x| = {norm!r} differs from 1 by more than {tol}")
    return UnitPoint(x)
