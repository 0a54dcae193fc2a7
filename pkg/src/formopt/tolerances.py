"""Scale-aware numerical thresholds shared by certification, search and analysis."""
from dataclasses import asdict, dataclass
from typing import Optional


@dataclass(frozen=True)
class ToleranceSet:
    """Thresholds for the first/second-order tests.

    Each threshold is relative by default and scales with the local size of
    the problem, since a form can be rescaled arbitrarily:

    * ``fonc = fonc_rel * (1 + ||grad f(x)||)``
    * ``eig  = eig_rel  * (1 + max|H_ij|)``
    * ``det  = det_rel  * (1 + max|H_ij|) ** n``

    Setting ``fonc_tol``, ``eig_tol`` or ``det_tol`` replaces the relative
    rule with a fixed absolute threshold.
    """

    fonc_rel: float = 1e-8
    eig_rel: float = 1e-7
    det_rel: float = 1e-8
    unit_tol: float = 1e-12
    fonc_tol: Optional[float] = None
    eig_tol: Optional[float] = None
    det_tol: Optional[float] = None

    def __post_init__(self):
        for name, value in asdict(self).items():
            if value is not None and not value > 0:
                raise ValueError(f"tolerance {name} must be positive, got {value!r}")

    def fonc(self, grad_norm):
        if self.fonc_tol is not None:
            return self.fonc_tol
        return self.fonc_rel * (1.0 + grad_norm)

    def eig(self, hess_max):
        if self.eig_tol is not None:
            return self.eig_tol
        return self.eig_rel * (1.0 + hess_max)

    def det(self, hess_max, n):
        if self.det_tol is not None:
            return self.det_tol
        return self.det_rel * (1.0 + hess_max) ** n

    def to_dict(self):
        return asdict(self)

    @classmethod
    def from_dict(cls, data):
        return cls(**{k: v for k, v in data.items() if k in cls.__dataclass_fields__})


DEFAULT_TOLERANCES = ToleranceSet()
