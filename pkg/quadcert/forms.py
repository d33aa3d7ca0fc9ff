"""
Quadratic forms in two variables.

A quadratic form q(z) = c^T phi(z) uses the monomial basis
phi(x, y) = [x^2, y^2, xy, x, y, 1]. The same form has a symmetric matrix
view Q over (x, y, 1) so that q(z) = [z; 1]^T Q [z; 1].
"""

import dataclasses
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

BASIS_LABELS = ("x^2", "y^2", "xy", "x", "y", "1")
BASIS_EXPONENTS = ((2, 0), (0, 2), (1, 1), (1, 0), (0, 1), (0, 0))
ORIENTATIONS = ("upper", "lower", "unconstrained")
PROVENANCES = ("candidate", "analytic", "builtin")


def features(points) -> np.ndarray:
    """Stack phi(z) for an (n, 2) array of points into an (n, 6) matrix."""
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    x, y = pts[:, 0], pts[:, 1]
    return np.column_stack([x * x, y * y, x * y, x, y, np.ones_like(x)])


def coeffs_to_matrix(c) -> np.ndarray:
    c = np.asarray(c, dtype=float)
    return np.array(
        [
            [c[0], c[2] / 2, c[3] / 2],
            [c[2] / 2, c[1], c[4] / 2],
            [c[3] / 2, c[4] / 2, c[5]],
        ]
    )


def matrix_to_coeffs(Q) -> np.ndarray:
    Q = np.asarray(Q, dtype=float)
    if Q.shape != (3, 3):
        raise ValueError(f"Expected a 3x3 matrix, got shape {Q.shape}")
    if not np.allclose(Q, Q.T, rtol=0, atol=0):
        raise ValueError("Matrix view of a quadratic form must be symmetric")
    return np.array([Q[0, 0], Q[1, 1], 2 * Q[0, 1], 2 * Q[0, 2], 2 * Q[1, 2], Q[2, 2]])


@dataclass(frozen=True)
class QuadraticForm:
    """
    Quadratic form with its bookkeeping metadata.

    Args:
        coeffs: six coefficients in basis order [x^2, y^2, xy, x, y, 1]
        tag: subdomain tag or family label
        orientation: 'upper', 'lower' or 'unconstrained'
        provenance: 'candidate', 'analytic' or 'builtin'
    """

    coeffs: Sequence[float]
    tag: str = ""
    orientation: str = "unconstrained"
    provenance: str = "candidate"
    meta: dict = field(default_factory=dict, compare=False, hash=False)

    def __post_init__(self):
        c = tuple(float(v) for v in self.coeffs)
        if len(c) != 6:
            raise ValueError(f"A quadratic form has 6 coefficients, got {len(c)}")
        if not all(np.isfinite(c)):
            raise ValueError("Quadratic form coefficients must be finite")
        if self.orientation not in ORIENTATIONS:
            raise ValueError(f"Unknown orientation '{self.orientation}'")
        if self.provenance not in PROVENANCES:
            raise ValueError(f"Unknown provenance '{self.provenance}'")
        object.__setattr__(self, "coeffs", c)

    @classmethod
    def from_matrix(cls, Q, **kwargs):
        return cls(tuple(matrix_to_coeffs(Q)), **kwargs)

    @property
    def c(self) -> np.ndarray:
        return np.array(self.coeffs)

    @property
    def matrix(self) -> np.ndarray:
        return coeffs_to_matrix(self.coeffs)

    def __call__(self, x, y):
        a, b, cxy, d, e, f = self.coeffs
        return a * x * x + b * y * y + cxy * x * y + d * x + e * y + f

    def evaluate_points(self, points) -> np.ndarray:
        return features(points) @ self.c

    def to_polynomial(self):
        from quadcert.relations.polynomial import Polynomial2

        return Polynomial2({e: c for e, c in zip(BASIS_EXPONENTS, self.coeffs)})

    def replace(self, **changes):
        return dataclasses.replace(self, **changes)

    def to_record(self) -> dict:
        record = {
            "coeffs": list(self.coeffs),
            "tag": self.tag,
            "orientation": self.orientation,
            "provenance": self.provenance,
        }
        if self.meta:
            record["meta"] = dict(self.meta)
        return record

    @classmethod
    def from_record(cls, record: dict):
        return cls(
            tuple(record["coeffs"]),
            tag=record.get("tag", ""),
            orientation=record.get("orientation", "unconstrained"),
            provenance=record.get("provenance", "candidate"),
            meta=dict(record.get("meta", {})),
        )
