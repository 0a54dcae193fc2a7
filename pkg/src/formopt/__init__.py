"""Local-minimum certification for homogeneous polynomials on the unit sphere."""
__version__ = "0.1.0"

from ._errors import FormoptError
from .certify import Certificate, Classification, certify_point
from .estimators import CriticalPointSearch, LocalMinCertifier
from .forms import Form, UnitPoint, load_form, random_form
from .search import CriticalPoint, SearchConfig, find_critical, grid_oracle
from .spurious import SpuriousReport, Verdict, analyze, ball_sphere_check
from .tolerances import ToleranceSet

__all__ = [
    "Certificate",
    "Classification",
    "CriticalPoint",
    "CriticalPointSearch",
    "Form",
    "FormoptError",
    "LocalMinCertifier",
    "SearchConfig",
    "SpuriousReport",
    "ToleranceSet",
    "UnitPoint",
    "Verdict",
    "analyze",
    "ball_sphere_check",
    "certify_point",
    "find_critical",
    "grid_oracle",
    "load_form",
    "random_form",
]
