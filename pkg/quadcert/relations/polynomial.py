"""
Sparse bivariate polynomials.

A ``Polynomial2`` stores a mapping from exponent pairs ``(i, j)`` to the
coefficient of ``x**i * y**j``. Arithmetic never stores a zero coefficient and
is exact over whatever coefficient type is used (floats for assembly, mpmath
numbers for the extended-precision certificate re-check).
"""

import math
from types import MappingProxyType
from typing import Callable, Dict, Iterable, List, Tuple

import numpy as np

Exponent = Tuple[int, int]


class Polynomial2:
    """Polynomial in the two variables ``x`` and ``y``."""

    __slots__ = ("_terms",)

    def __init__(self, terms=None):
        cleaned: Dict[Exponent, object] = {}
        for key, coeff in (terms or {}).items():
            i, j = int(key[0]), int(key[1])
            if i < 0 or j < 0:
                raise ValueError(f"Negative exponent {key} in polynomial term")
            if coeff != 0:
                cleaned[(i, j)] = cleaned.get((i, j), 0) + coeff
                if cleaned[(i, j)] == 0:
                    del cleaned[(i, j)]
        self._terms = cleaned

    # constructors

    @classmethod
    def constant(cls, value):
        return cls({(0, 0): value})

    @classmethod
    def monomial(cls, i, j, coeff=1.0):
        return cls({(i, j): coeff})

    @classmethod
    def x(cls):
        return cls.monomial(1, 0)

    @classmethod
    def y(cls):
        return cls.monomial(0, 1)

    @classmethod
    def from_x_coeffs(cls, coeffs: Iterable):
        """Univariate polynomial in x from ascending power coefficients."""
        return cls({(k, 0): c for k, c in enumerate(coeffs)})

    @classmethod
    def from_records(cls, records: List[dict]):
        terms = {}
        for rec in records:
            key = (int(rec.get("x", 0)), int(rec.get("y", 0)))
            terms[key] = terms.get(key, 0.0) + float(rec["c"])
        return cls(terms)

    # views

    @property
    def terms(self):
        return MappingProxyType(self._terms)

    @property
    def degree(self) -> int:
        """Total degree; the zero polynomial has degree -1."""
        if not self._terms:
            return -1
        return max(i + j for i, j in self._terms)

    @property
    def is_zero(self) -> bool:
        return not self._terms

    @property
    def x_only(self) -> bool:
        return all(j == 0 for _, j in self._terms)

    def coefficient(self, i, j):
        return self._terms.get((i, j), 0)

    def sorted_terms(self) -> List[Tuple[Exponent, object]]:
        """Terms in graded order (total degree, then descending x power)."""
        return sorted(self._terms.items(), key=lambda kv: (kv[0][0] + kv[0][1], -kv[0][0]))

    def x_coeffs(self) -> List:
        """Ascending power coefficients of an x-only polynomial."""
        if not self.x_only:
            raise ValueError("Polynomial depends on y")
        if not self._terms:
            return [0.0]
        top = max(i for i, _ in self._terms)
        return [self._terms.get((k, 0), 0.0) for k in range(top + 1)]

    def max_abs_coefficient(self):
        return max((abs(c) for c in self._terms.values()), default=0.0)

    def is_finite(self) -> bool:
        return all(np.isfinite(float(c)) for c in self._terms.values())

    def to_records(self) -> List[dict]:
        return [{"x": i, "y": j, "c": float(c)} for (i, j), c in self.sorted_terms()]

    # arithmetic

    def _coerce(self, other):
        if isinstance(other, Polynomial2):
            return other
        return Polynomial2.constant(other)

    def __add__(self, other):
        other = self._coerce(other)
        terms = dict(self._terms)
        for key, c in other._terms.items():
            terms[key] = terms.get(key, 0) + c
        return Polynomial2(terms)

    __radd__ = __add__

    def __neg__(self):
        return Polynomial2({k: -c for k, c in self._terms.items()})

    def __sub__(self, other):
        return self + (-self._coerce(other))

    def __rsub__(self, other):
        return self._coerce(other) - self

    def __mul__(self, other):
        if not isinstance(other, Polynomial2):
            return Polynomial2({k: c * other for k, c in self._terms.items()})
        terms: Dict[Exponent, object] = {}
        for (i1, j1), c1 in self._terms.items():
            for (i2, j2), c2 in other._terms.items():
                key = (i1 + i2, j1 + j2)
                terms[key] = terms.get(key, 0) + c1 * c2
        return Polynomial2(terms)

    __rmul__ = __mul__

    def __pow__(self, power: int):
        if not isinstance(power, int) or power < 0:
            raise ValueError("Only non-negative integer powers are supported")
        result = Polynomial2.constant(1.0)
        for _ in range(power):
            result = result * self
        return result

    def __eq__(self, other):
        if not isinstance(other, Polynomial2):
            return NotImplemented
        return self._terms == other._terms

    def __hash__(self):
        return hash(tuple(sorted(self._terms.items())))

    def __call__(self, x, y=0.0):
        """Evaluate at scalars or broadcastable numpy arrays."""
        if not self._terms:
            return 0.0 * x
        total = 0
        for (i, j), c in self._terms.items():
            total = total + c * (x ** i) * (y ** j)
        return total

    # transforms

    def derivative_x(self):
        return Polynomial2({(i - 1, j): c * i for (i, j), c in self._terms.items() if i > 0})

    def affine_x(self, shift, scale):
        """Return p(shift + scale*u, y) as a polynomial in (u, y)."""
        terms: Dict[Exponent, object] = {}
        for (i, j), c in self._terms.items():
            for k in range(i + 1):
                coeff = c * math.comb(i, k) * (shift ** (i - k)) * (scale ** k)
                terms[(k, j)] = terms.get((k, j), 0) + coeff
        return Polynomial2(terms)

    def map_coefficients(self, func: Callable):
        return Polynomial2({k: func(c) for k, c in self._terms.items()})

    def __repr__(self):
        if not self._terms:
            return "Polynomial2(0)"
        parts = []
        for (i, j), c in self.sorted_terms():
            mono = "*".join(s for s in (_power("x", i), _power("y", j)) if s)
            parts.append(f"{float(c):+.6g}" + (f"*{mono}" if mono else ""))
        return "Polynomial2(" + " ".join(parts) + ")"


def _power(name, k):
    if k == 0:
        return ""
    return name if k == 1 else f"{name}^{k}"


def interval_constraint(a: float, b: float) -> Polynomial2:
    """(x - a)(b - x), nonnegative exactly on [a, b]."""
    x = Polynomial2.x()
    return (x - a) * (b - x)
