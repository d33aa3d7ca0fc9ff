"""
Sample classes for candidate generation.

Three classes feed the candidate QP: local samples on a subdomain of the
graph, global samples on the whole graph, and exterior samples off the graph
where a candidate should turn negative.
"""

import math
from dataclasses import dataclass, field
from typing import Dict, Iterable, Optional, Sequence

import numpy as np

from quadcert.exceptions import DomainError, PreconditionError, SamplingError
from quadcert.relations.relation import GRAPH_TOL, ScalarRelation, eval_graph

EXTERIOR_SEPARATION = 1e-3
BOUNDARY_FRACTION = 0.1
PLACEMENTS = ("uniform", "boundary_weighted")


@dataclass(frozen=True)
class SampleSet:
    """
    Local, global and exterior samples, each an (n, 2) array of (x, y) points.

    Local and exterior samples are keyed by subdomain tag.
    """

    local: Dict[str, np.ndarray] = field(default_factory=dict)
    global_points: np.ndarray = field(default_factory=lambda: np.zeros((0, 2)))
    exterior: Dict[str, np.ndarray] = field(default_factory=dict)

    def local_for(self, tag: str) -> np.ndarray:
        return self.local.get(tag, np.zeros((0, 2)))

    def exterior_for(self, tag: str) -> np.ndarray:
        return self.exterior.get(tag, np.zeros((0, 2)))

    def counts(self, tag: str):
        """(n_loc, n_g, m) for one subdomain."""
        return len(self.local_for(tag)), len(self.global_points), len(self.exterior_for(tag))


def _check_interval(rel: ScalarRelation, interval):
    a, b = (float(v) for v in interval)
    if a > b:
        raise DomainError(f"Empty interval [{a}, {b}]")
    lo, hi = rel.domain
    if a < lo or b > hi:
        raise DomainError(f"Interval [{a}, {b}] leaves the domain [{lo}, {hi}] of '{rel.name}'")
    return a, b


def _stratified(rng, a, b, n):
    if n <= 0:
        return np.zeros(0)
    width = (b - a) / n
    return a + width * (np.arange(n) + rng.random(n))


def sample_x(rel: ScalarRelation, interval, n: int, seed: int, placement: str = "uniform") -> np.ndarray:
    """Sorted x locations following ``placement``, deterministic in ``seed``."""
    a, b = _check_interval(rel, interval)
    if n < 1:
        raise PreconditionError("At least one sample is required")
    if placement not in PLACEMENTS:
        raise PreconditionError(f"Unknown placement '{placement}'. Use one of {PLACEMENTS}")
    rng = np.random.default_rng(seed)

    if placement == "uniform":
        xs = _stratified(rng, a, b, n)
    else:
        anchors = sorted({a, b, *[p for p in rel.breakpoints() if a <= p <= b]})
        n_near = math.ceil(n / 2)
        radius = BOUNDARY_FRACTION * (b - a)
        near = np.array([anchors[k % len(anchors)] for k in range(n_near)])
        near = np.clip(near + rng.uniform(-radius, radius, n_near), a, b)
        xs = np.concatenate([near, _stratified(rng, a, b, n - n_near)])
    return np.sort(xs)


def sample_graph(
    rel: ScalarRelation, interval, n: int, seed: int, placement: str = "uniform"
) -> np.ndarray:
    """
    n points on the graph of ``rel`` over ``interval``.

    'boundary_weighted' draws half the points (rounded up) within 10% of the
    interval length around the interval ends and the breakpoints inside it;
    the rest are stratified uniform draws.
    """
    xs = sample_x(rel, interval, n, seed, placement)
    return np.column_stack([xs, eval_graph(rel, xs)])


def anchor_points(rel: ScalarRelation) -> np.ndarray:
    """Graph points at the domain ends and at every breakpoint."""
    lo, hi = rel.domain
    xs = np.array(sorted({lo, hi, *rel.breakpoints()}))
    return np.column_stack([xs, eval_graph(rel, xs)])


def _off_graph(rel: ScalarRelation, points: np.ndarray, separation: float) -> np.ndarray:
    """Boolean mask of points at vertical distance >= separation from the graph."""
    lo, hi = rel.domain
    inside = (points[:, 0] >= lo) & (points[:, 0] <= hi)
    ok = np.ones(len(points), dtype=bool)
    if np.any(inside):
        gap = np.abs(points[inside, 1] - eval_graph(rel, points[inside, 0]))
        ok[inside] = gap >= separation
    return ok


def sample_exterior(
    rel: ScalarRelation,
    interval,
    n: int,
    offsets: Sequence[float],
    seed: int,
    targets: Optional[Iterable] = None,
    separation: float = EXTERIOR_SEPARATION,
) -> np.ndarray:
    """
    Points (x, f(x) + delta) for n sampled x and every offset delta, plus targets.

    Raises:
        PreconditionError: if an offset is zero
        SamplingError: if a generated or target point is within ``separation``
            of the graph
    """
    offsets = [float(d) for d in offsets]
    if any(d == 0 for d in offsets):
        raise PreconditionError("Exterior offsets must be nonzero")

    blocks = []
    if n > 0 and offsets:
        xs = sample_x(rel, interval, n, seed, "uniform")
        ys = eval_graph(rel, xs)
        blocks.append(np.array([(x, y + d) for x, y in zip(xs, ys) for d in offsets]))
    if targets is not None:
        extra = np.asarray(list(targets), dtype=float).reshape(-1, 2)
        if len(extra):
            blocks.append(extra)
    if not blocks:
        return np.zeros((0, 2))

    points = np.vstack(blocks)
    ok = _off_graph(rel, points, separation)
    if not np.all(ok):
        bad = points[~ok]
        raise SamplingError(
            f"{len(bad)} exterior point(s) lie within {separation} of the graph, "
            f"first at ({bad[0, 0]!r}, {bad[0, 1]!r})"
        )
    return points


def check_on_graph(rel: ScalarRelation, points: np.ndarray, tol: float = GRAPH_TOL) -> bool:
    """True when every point satisfies the relation to ``tol``."""
    if len(points) == 0:
        return True
    return bool(np.all(np.abs(points[:, 1] - eval_graph(rel, points[:, 0])) <= tol))
