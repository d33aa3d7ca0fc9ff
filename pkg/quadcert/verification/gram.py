"""
Gram-matrix bookkeeping for bivariate sum-of-squares problems.

A polynomial s = m(z)^T G m(z) with monomial vector m(z) is SOS iff some
admissible G is positive semidefinite. The maps below send vec(G), taken in
column-major order, to the coefficients of s * g for a fixed polynomial g.
"""

from typing import Dict, List, Sequence, Tuple

import numpy as np
import scipy.sparse as sp

from quadcert.relations.polynomial import Polynomial2

Exponent = Tuple[int, int]


def monomial_basis(half_degree: int) -> List[Exponent]:
    """All x^i y^j with i + j <= half_degree, graded (degree, then descending x power)."""
    if half_degree < 0:
        return []
    return [(i, k - i) for k in range(half_degree + 1) for i in range(k, -1, -1)]


def exponent_index(degree: int) -> Dict[Exponent, int]:
    return {e: k for k, e in enumerate(monomial_basis(degree))}


def coefficient_vector(p: Polynomial2, index: Dict[Exponent, int]) -> np.ndarray:
    vec = np.zeros(len(index))
    for key, c in p.terms.items():
        if key not in index:
            raise ValueError(f"Term {key} of {p!r} is outside the coefficient index")
        vec[index[key]] = float(c)
    return vec


def gram_map(basis: Sequence[Exponent], g: Polynomial2, index: Dict[Exponent, int]) -> sp.csr_matrix:
    """
    Sparse matrix A with A @ vec(G) = coefficients of (m^T G m) * g.

    ``vec`` stacks columns (Fortran order), matching
    ``cp.reshape(G, (N*N,), order='F')``.
    """
    n = len(basis)
    rows, cols, vals = [], [], []
    g_terms = list(g.terms.items())
    for b, (xb, yb) in enumerate(basis):
        for a, (xa, ya) in enumerate(basis):
            for (gi, gj), gc in g_terms:
                rows.append(index[(xa + xb + gi, ya + yb + gj)])
                cols.append(a + b * n)
                vals.append(float(gc))
    return sp.csr_matrix((vals, (rows, cols)), shape=(len(index), n * n))


def gram_to_polynomial(G, basis: Sequence[Exponent]) -> Polynomial2:
    """m^T G m as a polynomial. Works for float arrays and mpmath matrices."""
    terms = {}
    n = len(basis)
    for a in range(n):
        for b in range(n):
            key = (basis[a][0] + basis[b][0], basis[a][1] + basis[b][1])
            terms[key] = terms.get(key, 0) + G[a, b]
    return Polynomial2(terms)
