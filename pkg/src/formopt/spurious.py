"""Deciding whether a form has spurious local minima on the sphere.

Certified local minima are grouped by value with 1-D single linkage. One
value level means every local minimum found is global; two or more
well-separated levels exhibit a spurious minimum. The verdict is only as
complete as the critical-point search that fed it.
"""
from dataclasses import dataclass, field
from enum import Enum
from typing import List, Optional

import numpy as np

from ._errors import FormoptError
from .certify import Classification, _pair
from .forms import as_unit_point
from .tolerances import DEFAULT_TOLERANCES

__all__ = [
    "Verdict",
    "ValueCluster",
    "SpuriousReport",
    "BallSphereCheck",
    "omega_membership",
    "cluster_values",
    "analyze",
    "ball_sphere_check",
]


class Verdict(str, Enum):
    NO_SPURIOUS = "NoSpurious"
    SPURIOUS = "Spurious"
    INCONCLUSIVE = "Inconclusive"

    def __str__(self):
        return self.value


@dataclass(frozen=True)
class ValueCluster:
    value: float
    members: List[int]
    width: float

    def to_dict(self):
        return {"value": self.value, "members": list(self.members), "width": self.width}


@dataclass
class SpuriousReport:
    clusters: List[ValueCluster]
    verdict: Verdict
    negative_verdict: Verdict
    genericity_witness: bool
    global_min_estimate: float
    cluster_eps: float
    reasons: List[str] = field(default_factory=list)
    search: dict = field(default_factory=dict)

    def to_dict(self):
        return {
            "clusters": [c.to_dict() for c in self.clusters],
            "verdict": self.verdict.value,
            "negative_verdict": self.negative_verdict.value,
            "genericity_witness": self.genericity_witness,
            "global_min_estimate": self.global_min_estimate,
            "cluster_eps": self.cluster_eps,
            "reasons": list(self.reasons),
            "search": dict(self.search),
        }


def omega_membership(f, x, tols=DEFAULT_TOLERANCES):
    """Membership in the set where the eigenvalue test uses ``||grad f||``.

    ``f(x) < 0``: ``lambda_2 >= -||grad f(x)||``; ``f(x) >= 0``:
    ``lambda_1 >= ||grad f(x)||``. At first-order critical points
    ``||grad f|| = d |f|``, so this agrees with the second-order test there.
    """
    x = as_unit_point(x).coords
    if x.size != f.n:
        raise FormoptError("DIMENSION_MISMATCH", f"point has length {x.size}, form has n={f.n}")
    fx = float(f.evaluate(x))
    gn = float(np.linalg.norm(f.gradient(x)))
    H = f.hessian(x)
    lam1, lam2 = _pair(H)
    eig_tol = tols.eig(float(np.abs(H).max()))
    if fx < 0:
        return lam2 >= -gn - eig_tol
    return lam1 >= gn - eig_tol


def cluster_values(values, eps):
    """Single-linkage groups of sorted values; a gap larger than ``eps`` splits.

    Returns lists of indices into ``values``, ordered by increasing value.
    """
    order = np.argsort(np.asarray(values, dtype=float), kind="stable")
    groups = []
    for i in order:
        if groups and values[i] - values[groups[-1][-1]] <= eps:
            groups[-1].append(int(i))
        else:
            groups.append([int(i)])
    return groups


def analyze(f, criticals, cluster_eps=None, tols=DEFAULT_TOLERANCES, search_config=None):
    """Cluster certified minima by value and issue the spurious-minimum verdicts.

    ``verdict`` is Inconclusive when some point is ``DegenerateSONC``, when
    the genericity witness fails (a point passing the second-order test has
    a numerically zero bordered determinant), when no minimum was found, or
    when cluster separation is ambiguous (a cluster wider than
    ``cluster_eps`` or a gap below ``3 * cluster_eps``). ``negative_verdict``
    applies the same rule to clusters with negative value only.
    """
    if not criticals:
        raise FormoptError("EMPTY_INPUT", "no critical points to analyze")
    for cp in criticals:
        if cp.point.n != f.n:
            raise FormoptError("DIMENSION_MISMATCH", "critical point does not match the form")

    classes = [cp.cert.classification for cp in criticals]
    sonc_points = [cp for cp in criticals if cp.cert.classification.passes_sonc]
    witness = all(cp.cert.classification is Classification.STRICT_LOCAL_MIN for cp in sonc_points)
    degenerate = Classification.DEGENERATE_SONC in classes

    global_min = float(min(cp.cert.f_val for cp in criticals))
    eps = cluster_eps if cluster_eps is not None else 1e-6 * (1.0 + abs(global_min))

    min_idx = [i for i, cp in enumerate(criticals) if cp.cert.is_minimum]
    vals = [criticals[i].cert.f_val for i in min_idx]
    clusters = []
    for group in cluster_values(vals, eps):
        members = [min_idx[g] for g in group]
        gv = [vals[g] for g in group]
        clusters.append(
            ValueCluster(value=float(min(gv)), members=members, width=float(max(gv) - min(gv)))
        )

    reasons = []
    if degenerate:
        reasons.append("degenerate second-order point present")
    if not witness:
        reasons.append("genericity witness failed")

    def decide(cl, label):
        local = []
        if any(c.width > eps for c in cl):
            local.append(f"{label}: cluster wider than cluster_eps")
        gaps = [b.value - (a.value + a.width) for a, b in zip(cl, cl[1:])]
        if any(g <= 3 * eps for g in gaps):
            local.append(f"{label}: clusters separated by less than 3*cluster_eps")
        reasons.extend(local)
        if degenerate or not witness or local:
            return Verdict.INCONCLUSIVE
        return Verdict.NO_SPURIOUS if len(cl) <= 1 else Verdict.SPURIOUS

    if clusters:
        verdict = decide(clusters, "all minima")
    else:
        reasons.append("no certified local minimum found")
        verdict = Verdict.INCONCLUSIVE

    neg_tol = max((criticals[m].cert.eig_tol for m in min_idx), default=0.0)
    negative = [c for c in clusters if c.value < -neg_tol]
    negative_verdict = decide(negative, "negative minima")

    search = {
        "n_critical": len(criticals),
        "total_hits": int(sum(cp.hits for cp in criticals)),
        "n_unrefined": int(sum(not cp.refined for cp in criticals)),
    }
    if search_config is not None:
        search["config"] = search_config.to_dict()
        search["starts"] = search_config.resolved_starts(f.n)

    return SpuriousReport(
        clusters=clusters,
        verdict=verdict,
        negative_verdict=negative_verdict,
        genericity_witness=witness,
        global_min_estimate=global_min,
        cluster_eps=eps,
        reasons=reasons,
        search=search,
    )


@dataclass
class BallSphereCheck:
    passed: bool
    points: List[dict]

    def __bool__(self):
        return self.passed

    def to_dict(self):
        return {"passed": self.passed, "points": self.points}


def ball_sphere_check(f, criticals, samples=5000, radius=1e-2, seed=0, scale=0.9, rel_tol=1e-9):
    """Empirical check that sphere minima relate to unit-ball minima as expected.

    A sphere minimum with ``f <= 0`` must also be a local minimum over the
    closed unit ball: ``samples`` points drawn from the ``radius``-ball
    around it (pulled back into the unit ball) may not improve ``f`` by more
    than ``rel_tol * (1 + |f|)``. A minimum with ``f > 0`` cannot be one:
    the inward point ``scale * x`` has the smaller value ``scale**d * f(x)``.
    Values within the certificate's eigenvalue tolerance of zero count as
    zero.
    """
    rng = np.random.default_rng(seed)
    results = []
    passed = True
    for idx, cp in enumerate(criticals):
        if not cp.cert.is_minimum:
            continue
        x = cp.point.coords
        fx = float(f.evaluate(x))
        if fx <= 0 or cp.cert.f_near_zero_flag:
            dirs = rng.standard_normal((samples, f.n))
            dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
            r = radius * rng.random(samples) ** (1.0 / f.n)
            Y = x + r[:, None] * dirs
            norms = np.linalg.norm(Y, axis=1)
            Y[norms > 1.0] /= norms[norms > 1.0, None]
            worst = float(f.evaluate(Y).min())
            ok = worst >= fx - rel_tol * (1.0 + abs(fx))
            results.append(
                {"index": idx, "f_val": fx, "kind": "ball_minimum", "best_sample": worst, "ok": ok}
            )
        else:
            inward = float(f.evaluate(scale * x))
            ok = inward < fx
            results.append(
                {"index": idx, "f_val": fx, "kind": "scaling_witness", "inward_value": inward, "ok": ok}
            )
        passed &= ok
    return BallSphereCheck(passed=bool(passed), points=results)
