"""
Scalar relations S in the plane, restricted to a compact domain.

Two kinds are supported: piecewise-polynomial relations described by a union
of semialgebraic pieces, and evaluator-backed relations (tanh, saturation,
ReLU) that carry a Lipschitz bound on their domain.
"""

from dataclasses import dataclass, field
from typing import Optional, Tuple

import numpy as np

from quadcert.exceptions import AmbiguityError, DomainError, PreconditionError
from quadcert.forms import QuadraticForm
from quadcert.relations.polynomial import Polynomial2, interval_constraint
from quadcert.relations.registry import Evaluator

GRAPH_TOL = 1e-10
KINDS = ("piecewise_polynomial", "evaluator")
SYMMETRIES = ("none", "odd", "even")


@dataclass(frozen=True)
class SemialgebraicPiece:
    """
    The set {z : g_j(z) >= 0 for all j}.

    ``interval`` and ``graph`` are optional descriptive data: the x-range of the
    piece and, for function-graph pieces, the polynomial p with y = p(x).
    """

    constraints: Tuple[Polynomial2, ...]
    label: str = ""
    interval: Optional[Tuple[float, float]] = None
    graph: Optional[Polynomial2] = None

    def __post_init__(self):
        constraints = tuple(self.constraints)
        if not constraints:
            raise PreconditionError(f"Piece '{self.label}' has no constraints")
        for g in constraints:
            if not g.is_finite():
                raise PreconditionError(f"Piece '{self.label}' has a non-finite coefficient")
        object.__setattr__(self, "constraints", constraints)
        if self.interval is not None:
            a, b = (float(v) for v in self.interval)
            if a > b:
                raise DomainError(f"Piece '{self.label}' has empty interval [{a}, {b}]")
            object.__setattr__(self, "interval", (a, b))

    @classmethod
    def from_graph(cls, interval, p: Polynomial2, label: str = ""):
        """Piece {x in [a, b], y = p(x)} written as three inequalities."""
        if not p.x_only:
            raise PreconditionError("Graph polynomial must depend on x only")
        a, b = interval
        y = Polynomial2.y()
        constraints = (interval_constraint(a, b), y - p, p - y)
        return cls(constraints, label=label, interval=(a, b), graph=p)

    def residuals(self, x, y) -> np.ndarray:
        return np.array([g(x, y) for g in self.constraints])

    def contains(self, x, y, tol: float = GRAPH_TOL) -> bool:
        return bool(np.all(self.residuals(x, y) >= -tol))

    def to_record(self) -> dict:
        record = {
            "label": self.label,
            "constraints": [g.to_records() for g in self.constraints],
        }
        if self.interval is not None:
            record["interval"] = list(self.interval)
        if self.graph is not None:
            record["graph"] = self.graph.to_records()
        return record


@dataclass(frozen=True)
class ScalarRelation:
    """
    Scalar relation restricted to ``domain``.

    Args:
        name: short identifier used in artifacts
        kind: 'piecewise_polynomial' or 'evaluator'
        domain: closed interval (x_lo, x_hi)
        symmetry: 'none', 'odd' or 'even'
        pieces: semialgebraic pieces (piecewise case)
        evaluator: point evaluator (evaluator case)
        lipschitz: Lipschitz bound on the domain (evaluator case)
        declared_breakpoints: breakpoints declared in the spec file
        sections: raw 'generation' / 'verification' sections of the spec file
    """

    name: str
    kind: str
    domain: Tuple[float, float]
    symmetry: str = "none"
    pieces: Tuple[SemialgebraicPiece, ...] = ()
    evaluator: Optional[Evaluator] = None
    lipschitz: Optional[float] = None
    declared_breakpoints: Tuple[float, ...] = ()
    sections: dict = field(default_factory=dict, compare=False, hash=False)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise PreconditionError(f"Unknown relation kind '{self.kind}'")
        if self.symmetry not in SYMMETRIES:
            raise PreconditionError(f"Unknown symmetry '{self.symmetry}'")
        lo, hi = (float(v) for v in self.domain)
        if lo > hi:
            raise DomainError(f"Empty domain [{lo}, {hi}]")
        object.__setattr__(self, "domain", (lo, hi))
        object.__setattr__(self, "pieces", tuple(self.pieces))
        object.__setattr__(
            self, "declared_breakpoints", tuple(sorted(float(b) for b in self.declared_breakpoints))
        )

        if self.kind == "evaluator":
            if self.evaluator is None:
                raise PreconditionError(f"Relation '{self.name}' needs an evaluator")
            if self.lipschitz is None or not self.lipschitz > 0:
                raise PreconditionError(f"Relation '{self.name}' must declare a positive Lipschitz bound")
        else:
            if not self.pieces:
                raise PreconditionError(f"Relation '{self.name}' has no pieces")
            self._check_piece_cover()
            self._check_piece_agreement()

    def _check_piece_cover(self):
        lo, hi = self.domain
        intervals = []
        for piece in self.pieces:
            if piece.interval is None:
                raise PreconditionError(f"Piece '{piece.label}' of '{self.name}' has no interval")
            a, b = piece.interval
            if a < lo or b > hi:
                raise DomainError(f"Piece '{piece.label}' interval [{a}, {b}] leaves domain [{lo}, {hi}]")
            intervals.append((a, b))
        reach = lo
        for a, b in sorted(intervals):
            if a > reach:
                raise DomainError(f"Pieces of '{self.name}' leave the gap ({reach}, {a}) uncovered")
            reach = max(reach, b)
        if reach < hi:
            raise DomainError(f"Pieces of '{self.name}' leave the gap ({reach}, {hi}) uncovered")

    def _check_piece_agreement(self):
        for x in self.breakpoints():
            values = [p.graph(x) for p in self._pieces_at(x) if p.graph is not None]
            if values and max(values) - min(values) > GRAPH_TOL:
                raise AmbiguityError(f"Pieces of '{self.name}' disagree at x={x!r}: {values}")

    def _pieces_at(self, x):
        return [p for p in self.pieces if p.interval[0] <= x <= p.interval[1]]

    @property
    def lipschitz_bound(self) -> float:
        if self.lipschitz is not None:
            return float(self.lipschitz)
        if self.evaluator is not None:
            return float(self.evaluator.lipschitz)
        raise PreconditionError(f"Relation '{self.name}' has no Lipschitz bound")

    @property
    def is_function_graph(self) -> bool:
        return self.kind == "evaluator" or all(p.graph is not None for p in self.pieces)

    def breakpoints(self) -> Tuple[float, ...]:
        """Declared breakpoints plus interior piece ends, inside the domain."""
        lo, hi = self.domain
        points = set(self.declared_breakpoints)
        if self.evaluator is not None:
            points.update(self.evaluator.breakpoints)
        for piece in self.pieces:
            if piece.interval is not None:
                points.update(piece.interval)
        return tuple(sorted(b for b in points if lo < b < hi))

    def check_symmetry(self, n: int = 1000, seed: int = 0, tol: float = GRAPH_TOL) -> bool:
        """Sampled check of the declared symmetry on the part of the domain mirrored into itself."""
        if self.symmetry == "none":
            return True
        lo, hi = self.domain
        r = min(-lo, hi)
        if r <= 0:
            return False
        xs = np.random.default_rng(seed).uniform(-r, r, n)
        fx, fmx = eval_graph(self, xs), eval_graph(self, -xs)
        target = -fx if self.symmetry == "odd" else fx
        return bool(np.max(np.abs(fmx - target)) <= tol)


def _check_in_domain(rel: ScalarRelation, xs: np.ndarray):
    lo, hi = rel.domain
    outside = (xs < lo) | (xs > hi)
    if np.any(outside):
        bad = xs[outside][0]
        raise DomainError(f"x={bad!r} outside the domain [{lo}, {hi}] of '{rel.name}'")


def eval_graph(rel: ScalarRelation, xs) -> np.ndarray:
    """Vectorized eval_relation."""
    xs = np.asarray(xs, dtype=float)
    _check_in_domain(rel, xs)
    if rel.kind == "evaluator":
        return rel.evaluator(xs)
    if not rel.is_function_graph:
        raise AmbiguityError(f"Relation '{rel.name}' is not a function graph")
    out = np.full(xs.shape, np.nan)
    for piece in rel.pieces:
        a, b = piece.interval
        mask = (xs >= a) & (xs <= b)
        if not np.any(mask):
            continue
        values = piece.graph(xs[mask])
        current = out[mask]
        clash = ~np.isnan(current) & (np.abs(current - values) > GRAPH_TOL)
        if np.any(clash):
            raise AmbiguityError(f"Pieces of '{rel.name}' disagree at x={xs[mask][clash][0]!r}")
        out[mask] = np.where(np.isnan(current), values, current)
    return out


def eval_relation(rel: ScalarRelation, x: float) -> float:
    """
    Value y with (x, y) in S.

    Raises:
        DomainError: if x lies outside rel.domain
        AmbiguityError: if the pieces at x do not define a single value
    """
    return float(eval_graph(rel, np.array([float(x)]))[0])


def apply_odd_symmetry(q: QuadraticForm) -> QuadraticForm:
    """q'(x, y) = q(-x, -y): flips the signs of the x and y coefficients."""
    a, b, c, d, e, f = q.coeffs
    return q.replace(coeffs=(a, b, c, -d, -e, f))
