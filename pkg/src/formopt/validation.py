"""Input validation shared by the estimators and the CLI."""
import os
from collections.abc import Mapping

import numpy as np
from sklearn.utils import check_array

from ._errors import FormoptError
from .forms import Form, load_form


def check_form(form):
    """Accept a :class:`Form`, a form document (dict) or a path to a JSON file."""
    if isinstance(form, Form):
        return form
    if isinstance(form, Mapping):
        return Form.from_dict(dict(form))
    if isinstance(form, (str, os.PathLike)):
        return load_form(form)
    raise FormoptError("INVALID_FORM", f"cannot interpret {type(form).__name__} as a form")


def check_points(X, n, normalize=False, tol=1e-8):
    """Validate a batch of sphere points, returning a float array of shape ``(m, n)``.

    A single point may be passed as a 1-D array. Rows must have unit norm to
    within ``tol`` unless ``normalize`` is set, in which case they are scaled.
    """
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X.reshape(1, -1)
    X = check_array(X, dtype=np.float64)
    if X.shape[1] != n:
        raise FormoptError("DIMENSION_MISMATCH", f"points have {X.shape[1]} columns, form has n={n}")
    norms = np.linalg.norm(X, axis=1)
    if np.any(norms == 0.0):
        raise FormoptError("INVALID_POINT", "zero vector cannot be placed on the sphere")
    if normalize:
        return X / norms[:, None]
    bad = np.flatnonzero(np.abs(norms - 1.0) > tol)
    if bad.size:
        raise FormoptError("NOT_NORMALIZED", f"row {bad[0]} has norm {norms[bad[0]]!r}")
    return X / norms[:, None]
