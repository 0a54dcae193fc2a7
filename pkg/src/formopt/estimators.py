"""scikit-learn style wrappers around certification and critical-point search.

``fit`` takes the form (a :class:`~formopt.forms.Form`, a form document or a
path); ``predict``/``transform`` take batches of sphere points shaped
``(n_samples, n)``. Hyperparameters follow the ``get_params``/``set_params``
protocol, so the estimators clone and grid-search like any other.
"""
import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from .certify import certify_point
from .search import SearchConfig, descend, find_critical, newton_refine
from .spurious import analyze
from .tolerances import ToleranceSet
from .validation import check_form, check_points

__all__ = ["LocalMinCertifier", "CriticalPointSearch"]

CERTIFICATE_FEATURES = (
    "f_val",
    "grad_norm",
    "fonc_residual",
    "lambda1",
    "lambda2",
    "tau",
    "det_bordered",
    "multiplier",
)


def _tolerances(est):
    return ToleranceSet(fonc_tol=est.fonc_tol, eig_tol=est.eig_tol, det_tol=est.det_tol)


class LocalMinCertifier(BaseEstimator):
    """Classify sphere points of a fixed form.

    Parameters
    ----------
    fonc_tol, eig_tol, det_tol : float, optional
        Absolute thresholds; ``None`` keeps the scale-aware defaults.
    normalize : bool, default=False
        Rescale input rows onto the sphere instead of rejecting them.

    Attributes
    ----------
    form_ : Form
    tolerances_ : ToleranceSet
    n_features_in_ : int
    """

    def __init__(self, fonc_tol=None, eig_tol=None, det_tol=None, normalize=False):
        self.fonc_tol = fonc_tol
        self.eig_tol = eig_tol
        self.det_tol = det_tol
        self.normalize = normalize

    def fit(self, form, y=None):
        self.form_ = check_form(form)
        self.tolerances_ = _tolerances(self)
        self.n_features_in_ = self.form_.n
        return self

    def certify(self, X):
        check_is_fitted(self, "form_")
        X = check_points(X, self.form_.n, normalize=self.normalize)
        return [certify_point(self.form_, x, self.tolerances_) for x in X]

    def transform(self, X):
        """Certificate diagnostics, one row per point (see ``get_feature_names_out``)."""
        certs = self.certify(X)
        return np.array([[getattr(c, k) for k in CERTIFICATE_FEATURES] for c in certs], dtype=float)

    def predict(self, X):
        return np.array([c.classification.value for c in self.certify(X)], dtype=object)

    def get_feature_names_out(self, input_features=None):
        return np.array(CERTIFICATE_FEATURES, dtype=object)


class CriticalPointSearch(BaseEstimator):
    """Find, certify and analyze the critical points of a form on the sphere.

    After ``fit``, ``critical_points_`` holds the deduplicated critical
    points and ``report_`` the spurious-minimum analysis. ``predict`` maps
    each input point to the index of the critical point its descent basin
    ends in (``-1`` if none matches).
    """

    def __init__(
        self,
        starts=None,
        seed=0,
        max_iters=1000,
        dedup_tol=1e-6,
        identify_antipodal=True,
        n_jobs=1,
        cluster_eps=None,
        fonc_tol=None,
        eig_tol=None,
        det_tol=None,
    ):
        self.starts = starts
        self.seed = seed
        self.max_iters = max_iters
        self.dedup_tol = dedup_tol
        self.identify_antipodal = identify_antipodal
        self.n_jobs = n_jobs
        self.cluster_eps = cluster_eps
        self.fonc_tol = fonc_tol
        self.eig_tol = eig_tol
        self.det_tol = det_tol

    def fit(self, form, y=None):
        self.form_ = check_form(form)
        self.n_features_in_ = self.form_.n
        self.tolerances_ = _tolerances(self)
        self.config_ = SearchConfig(
            starts=self.starts,
            seed=self.seed,
            max_iters=self.max_iters,
            dedup_tol=self.dedup_tol,
            identify_antipodal=self.identify_antipodal,
            n_jobs=self.n_jobs,
        )
        self.critical_points_ = find_critical(self.form_, self.config_, self.tolerances_)
        self.report_ = (
            analyze(self.form_, self.critical_points_, self.cluster_eps, self.tolerances_, self.config_)
            if self.critical_points_
            else None
        )
        return self

    @property
    def minima_(self):
        check_is_fitted(self, "critical_points_")
        return [cp for cp in self.critical_points_ if cp.cert.is_minimum]

    def transform(self, X):
        """Distance from each point to each critical point (antipodes merged as in ``fit``)."""
        check_is_fitted(self, "critical_points_")
        X = check_points(X, self.form_.n, normalize=True)
        if not self.critical_points_:
            return np.empty((X.shape[0], 0))
        C = np.array([cp.point.coords for cp in self.critical_points_])
        D = np.linalg.norm(X[:, None, :] - C[None, :, :], axis=-1)
        if self.identify_antipodal and self.form_.d % 2 == 0:
            D = np.minimum(D, np.linalg.norm(X[:, None, :] + C[None, :, :], axis=-1))
        return D

    def predict(self, X):
        check_is_fitted(self, "critical_points_")
        X = check_points(X, self.form_.n, normalize=True)
        ends = []
        for x in X:
            p = descend(self.form_, x, self.config_, self.tolerances_).point
            ends.append(newton_refine(self.form_, p)[0].coords)
        D = self.transform(np.array(ends))
        if D.shape[1] == 0:
            return np.full(X.shape[0], -1)
        labels = D.argmin(axis=1)
        labels[D.min(axis=1) > 100 * self.dedup_tol] = -1
        return labels
