"""
Polynomial approximants with validated error bounds, and the relaxed
verification pieces built from them.

An approximant p of f on [a, b] comes with eps such that |f(x) - p(x)| <= eps
for every x in [a, b]. The bound is checked on a uniform grid with spacing h,
padded by (L_f + L_p)*h/2 where L_f and L_p are Lipschitz bounds of f and p on
the interval; by the mean value theorem this covers the points between grid
nodes.
"""

import math
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np
from numpy.polynomial import Chebyshev, Polynomial

from quadcert.exceptions import ApproximationError, PreconditionError
from quadcert.relations.polynomial import Polynomial2
from quadcert.relations.relation import ScalarRelation, SemialgebraicPiece, eval_graph

METHODS = ("taylor", "chebyshev", "constant")
SCAN_POINTS = 20001
MAX_GRID = 5_000_000
EPS_MARGIN = 1.25
TINY = 1e-12
MAX_SPLITS = 4


@dataclass(frozen=True)
class PolyApprox:
    """
    Validated approximant.

    Args:
        interval: [a, b]
        p: polynomial in x only
        eps: error bound, validated by ``validate_error_bound``
        method: 'taylor', 'chebyshev' or 'constant'
        degree: requested degree (0 for constant)
    """

    interval: Tuple[float, float]
    p: Polynomial2
    eps: float
    method: str
    degree: int = 0

    def to_record(self) -> dict:
        return {
            "interval": list(self.interval),
            "p": self.p.to_records(),
            "eps": self.eps,
            "method": self.method,
            "degree": self.degree,
        }


def derivative_bound(p: Polynomial2, interval) -> float:
    """L_p = sum_k k*|a_k|*R^(k-1) with R = max(|a|, |b|)."""
    a, b = interval
    R = max(abs(a), abs(b))
    coeffs = p.x_coeffs()
    return float(sum(k * abs(c) * R ** (k - 1) for k, c in enumerate(coeffs) if k > 0))


def _grid_error(rel, p, a, b, n):
    xs = np.linspace(a, b, n)
    return float(np.max(np.abs(eval_graph(rel, xs) - p(xs))))


def validate_error_bound(rel: ScalarRelation, p: Polynomial2, interval, eps: float) -> bool:
    """
    True iff max_grid |f - p| + (L_f + L_p)*h/2 <= eps on a uniform grid whose
    padding is at most eps/10.
    """
    a, b = (float(v) for v in interval)
    if not eps > 0:
        return False
    L = rel.lipschitz_bound + derivative_bound(p, (a, b))
    if b == a or L == 0:
        n, h = 2, 0.0
    else:
        n = math.ceil(5.0 * L * (b - a) / eps) + 1
        if n > MAX_GRID:
            return False
        h = (b - a) / (n - 1)
    return _grid_error(rel, p, a, b, n) + L * h / 2 <= eps


def _taylor(rel, a, b, degree, center):
    c = 0.5 * (a + b) if center is None else float(center)
    coeffs = rel.evaluator.taylor_coefficients(c, degree)
    # p(x) = T(x - c)
    return Polynomial2.from_x_coeffs(coeffs).affine_x(-c, 1.0)


def _chebyshev(rel, a, b, degree):
    series = Chebyshev.interpolate(lambda x: eval_graph(rel, x), degree, domain=[a, b])
    power = series.convert(kind=Polynomial, domain=[-1, 1], window=[-1, 1])
    return Polynomial2.from_x_coeffs(power.coef)


def _constant(rel, a, b):
    n = SCAN_POINTS
    xs = np.linspace(a, b, n)
    ys = eval_graph(rel, xs)
    pad = rel.lipschitz_bound * (b - a) / (n - 1) / 2
    lo, hi = float(ys.min()) - pad, float(ys.max()) + pad
    return Polynomial2.constant(0.5 * (lo + hi)), 0.5 * (hi - lo)


def approx_with_bound(
    rel: ScalarRelation, interval, degree: int = 0, method: str = "chebyshev", center: Optional[float] = None
) -> PolyApprox:
    """
    Polynomial approximant of an evaluator-backed relation with validated eps.

    eps starts at 1.25 times the scanned maximum error; if validation fails it
    is doubled once.

    Raises:
        PreconditionError: for non-evaluator relations or unknown methods
        ApproximationError: if the doubled bound still fails validation
    """
    if rel.kind != "evaluator":
        raise PreconditionError(f"Relation '{rel.name}' is not evaluator-backed")
    if method not in METHODS:
        raise PreconditionError(f"Unknown approximation method '{method}'. Use one of {METHODS}")
    a, b = (float(v) for v in interval)
    lo, hi = rel.domain
    if a > b or a < lo or b > hi:
        raise PreconditionError(f"Interval [{a}, {b}] is not inside the domain [{lo}, {hi}]")

    if method == "constant":
        p, eps = _constant(rel, a, b)
        degree = 0
        eps = eps + TINY
    else:
        p = _taylor(rel, a, b, degree, center) if method == "taylor" else _chebyshev(rel, a, b, degree)
        eps = EPS_MARGIN * _grid_error(rel, p, a, b, SCAN_POINTS) + TINY

    for attempt in range(2):
        if validate_error_bound(rel, p, (a, b), eps):
            return PolyApprox((a, b), p, eps, method, degree)
        eps *= 2.0
    raise ApproximationError(
        f"Could not validate a {method} approximant of '{rel.name}' on [{a}, {b}] (last eps {eps / 2:.3e})"
    )


def build_relaxed_pieces(approxes: Sequence[PolyApprox]) -> List[SemialgebraicPiece]:
    """Band pieces {x in [a, b], |y - p(x)| <= eps}."""
    y = Polynomial2.y()
    pieces = []
    for ap in approxes:
        a, b = ap.interval
        x = Polynomial2.x()
        constraints = ((x - a) * (b - x), y - ap.p + ap.eps, ap.p + ap.eps - y)
        label = f"{ap.method}[{a!r},{b!r}]"
        pieces.append(SemialgebraicPiece(constraints, label=label, interval=(a, b), graph=ap.p))
    return pieces


def _refined(rel, interval, degree, method, center, max_eps, splits):
    ap = approx_with_bound(rel, interval, degree=degree, method=method, center=center)
    if max_eps is None or ap.eps <= max_eps or splits <= 0:
        return [ap]
    a, b = ap.interval
    mid = 0.5 * (a + b)
    # halves are expanded around their own midpoints
    return _refined(rel, (a, mid), degree, method, None, max_eps, splits - 1) + _refined(
        rel, (mid, b), degree, method, None, max_eps, splits - 1
    )


def approximate_partition(
    rel: ScalarRelation,
    partition: Sequence[dict],
    max_eps: Optional[float] = None,
    max_splits: int = MAX_SPLITS,
) -> List[PolyApprox]:
    """
    Approximants for records ``{"interval": [a, b], "method": ..., "degree": ...}``.

    With ``max_eps`` set (globally or per record) an interval whose validated
    eps exceeds it is bisected, at most ``max_splits`` times along any branch,
    so one record may give several consecutive approximants. An interval still
    above ``max_eps`` after the last split is kept as is.
    """
    if max_eps is not None and not max_eps > 0:
        raise PreconditionError(f"max_eps must be positive, got {max_eps}")
    approxes = []
    for rec in partition:
        approxes.extend(
            _refined(
                rel,
                rec["interval"],
                int(rec.get("degree", 0)),
                rec.get("method", "chebyshev"),
                rec.get("center"),
                rec.get("max_eps", max_eps),
                int(rec.get("max_splits", max_splits)),
            )
        )
    return approxes


def verification_pieces(rel: ScalarRelation, section: Optional[dict] = None):
    """
    Pieces a candidate must verify on.

    Piecewise-polynomial relations use their exact pieces. Evaluator-backed
    relations use relaxed bands over the partition in the 'verification'
    section, refined until every band is at most the section's ``max_eps``
    when one is given. Returns (pieces, approxes); approxes is empty for exact
    pieces.
    """
    if rel.kind == "piecewise_polynomial":
        return list(rel.pieces), []
    section = section if section is not None else rel.sections.get("verification", {})
    partition = section.get("partition")
    if not partition:
        raise PreconditionError(f"Relation '{rel.name}' needs a verification partition")
    max_eps = section.get("max_eps")
    approxes = approximate_partition(
        rel,
        partition,
        max_eps=None if max_eps is None else float(max_eps),
        max_splits=int(section.get("max_splits", MAX_SPLITS)),
    )
    return build_relaxed_pieces(approxes), approxes
