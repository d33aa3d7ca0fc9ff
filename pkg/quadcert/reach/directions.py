"""
Facet direction sets and width metrics for output polytopes.
"""

from typing import List, Sequence, Tuple

import numpy as np

from quadcert.exceptions import PreconditionError


def box_directions(n: int) -> List[np.ndarray]:
    """+e_1, -e_1, ..., +e_n, -e_n."""
    dirs = []
    for i in range(n):
        e = np.zeros(n)
        e[i] = 1.0
        dirs.extend([e, -e])
    return dirs


def projection_directions(n_y: int, plane: Tuple[int, int] = (0, 1), count: int = 180) -> List[np.ndarray]:
    """
    ``count`` directions at uniform angles in the (plane[0], plane[1]) output
    plane, starting at the first axis. Missing axis directions are appended.
    """
    p, q = plane
    if p == q or not (0 <= p < n_y and 0 <= q < n_y):
        raise PreconditionError(f"Invalid projection plane {plane} for {n_y} outputs")
    if count < 1:
        raise PreconditionError("count must be positive")
    dirs = []
    for k in range(count):
        angle = 2.0 * np.pi * k / count
        a = np.zeros(n_y)
        a[p], a[q] = np.cos(angle), np.sin(angle)
        a[np.abs(a) < 1e-15] = 0.0
        dirs.append(a)
    for axis in box_directions(n_y):
        if axis[p] == 0 and axis[q] == 0:
            continue
        if not any(np.allclose(axis, d, rtol=0, atol=1e-12) for d in dirs):
            dirs.append(axis)
    return dirs


def opposite_pairs(directions: Sequence[np.ndarray]) -> List[Tuple[int, int]]:
    pairs = []
    dirs = [np.asarray(d, dtype=float) for d in directions]
    for i, a in enumerate(dirs):
        for j in range(i + 1, len(dirs)):
            if np.allclose(dirs[j], -a, rtol=0, atol=1e-12):
                pairs.append((i, j))
                break
    return pairs


def average_width(polytope) -> float:
    """
    Mean of b(a) + b(-a) over opposite unit-direction pairs, divided by
    |a| so that it is the Euclidean width along a.
    """
    kept = polytope.kept
    widths = []
    for i, j in opposite_pairs([f.direction for f in kept]):
        norm = np.linalg.norm(kept[i].direction)
        widths.append((kept[i].bound + kept[j].bound) / norm)
    if not widths:
        return float("nan")
    return float(np.mean(widths))


def output_interval(polytope, index: int = 0) -> Tuple[float, float]:
    """[-b(-e_i), b(e_i)] for output ``index``."""
    e = np.zeros(polytope.n_y)
    e[index] = 1.0
    return -polytope.support(-e), polytope.support(e)


def polygon_vertices(A: np.ndarray, b: np.ndarray) -> np.ndarray:
    """
    Vertices of a bounded 2D polygon {z : A z <= b}, in counterclockwise order,
    from intersections of facets adjacent in angle.
    """
    A, b = np.asarray(A, dtype=float), np.asarray(b, dtype=float)
    order = np.argsort(np.arctan2(A[:, 1], A[:, 0]))
    A, b = A[order], b[order]
    verts = []
    for k in range(len(b)):
        M = np.vstack([A[k], A[(k + 1) % len(b)]])
        if abs(np.linalg.det(M)) < 1e-12:
            continue
        z = np.linalg.solve(M, [b[k], b[(k + 1) % len(b)]])
        if np.all(A @ z <= b + 1e-9 * (1 + np.abs(b))):
            verts.append(z)
    return np.array(verts).reshape(-1, 2)


def facet_lines(polytope, plane: Tuple[int, int] = (0, 1)) -> np.ndarray:
    """
    Rows (a_p, a_q, b, z_start_p, z_start_q, z_end_p, z_end_q) for facets whose
    normal lies in the plane; segment ends come from the polygon they bound.
    """
    p, q = plane
    kept = [f for f in polytope.kept if np.allclose(np.delete(f.direction, [p, q]), 0.0)]
    if len(kept) < 3:
        return np.zeros((0, 7))
    A = np.array([[f.direction[p], f.direction[q]] for f in kept])
    b = np.array([f.bound for f in kept])
    verts = polygon_vertices(A, b)
    rows = []
    for a, off in zip(A, b):
        on = [v for v in verts if abs(a @ v - off) <= 1e-7 * (1 + abs(off))]
        if len(on) >= 2:
            rows.append([a[0], a[1], off, *on[0], *on[-1]])
    return np.array(rows).reshape(-1, 7)
