"""
Extended-precision re-check of SOS certificates.

Solver output is not trusted: every Gram matrix is projected onto the PSD
cone by clipping its eigenvalues at zero (in mpmath arithmetic) and the
polynomial identity is recomputed from the piece and the quadratic form.
"""

from dataclasses import dataclass
from typing import TYPE_CHECKING, Sequence

import mpmath
import numpy as np

from quadcert.forms import QuadraticForm
from quadcert.relations.polynomial import Polynomial2
from quadcert.relations.relation import SemialgebraicPiece
from quadcert.verification.gram import gram_to_polynomial

if TYPE_CHECKING:
    from quadcert.verification.sos import SOSCertificate

RECHECK_DPS = 50
RECHECK_TOL = 1e-7


@dataclass(frozen=True)
class RecheckResult:
    passed: bool
    residual: float
    perturbation: float
    min_eigenvalue: float
    message: str = ""

    def __bool__(self):
        return self.passed

    def to_record(self) -> dict:
        return {
            "passed": self.passed,
            "residual": self.residual,
            "perturbation": self.perturbation,
            "min_eigenvalue": self.min_eigenvalue,
            "message": self.message,
        }


def clip_psd(G):
    """
    Nearest PSD matrix in mpmath arithmetic.

    Returns (clipped, perturbation, min_eigenvalue); the perturbation is the
    spectral norm of the change, i.e. max(0, -min_eigenvalue).
    """
    A = mpmath.matrix(np.asarray(G, dtype=float).tolist())
    A = (A + A.T) * mpmath.mpf(0.5)
    E, Q = mpmath.mp.eigsy(A)
    lam = [E[k] for k in range(A.rows)]
    lam_min = min(lam)
    D = mpmath.mp.diag([max(v, 0) for v in lam])
    return Q * D * Q.T, max(-lam_min, mpmath.mpf(0)), lam_min


def recheck_certificate(
    cert: "SOSCertificate",
    q: QuadraticForm,
    piece: SemialgebraicPiece,
    dps: int = RECHECK_DPS,
    tol: float = RECHECK_TOL,
) -> RecheckResult:
    """
    Recompute q - sum_j sigma_j g_j - m^T G_0 m in ``dps`` digits.

    Passes iff the largest coefficient of that residual is <= tol and no
    Gram matrix needed an eigenvalue clip larger than tol.
    """
    return recheck_identity(cert, q.to_polynomial(), piece.constraints, dps=dps, tol=tol)


def recheck_identity(
    cert: "SOSCertificate",
    target: Polynomial2,
    constraints: Sequence[Polynomial2],
    dps: int = RECHECK_DPS,
    tol: float = RECHECK_TOL,
) -> RecheckResult:
    """Re-check of target - sum_j sigma_j g_j in SOS, with constraints in original coordinates."""
    if len(cert.multipliers) != len(constraints):
        return RecheckResult(
            False, float("inf"), float("inf"), float("nan"),
            f"certificate has {len(cert.multipliers)} multipliers, got {len(constraints)} constraints",
        )

    with mpmath.workdps(dps):
        mpf = mpmath.mpf
        centre, half_width = (mpf(v) for v in cert.transform)
        total = target.map_coefficients(mpf).affine_x(centre, half_width)
        perturbation, lam_min = mpf(0), mpf("inf")

        for (basis, G), g, scale in zip(cert.multipliers, constraints, cert.constraint_scales):
            clipped, pert, low = clip_psd(G)
            perturbation, lam_min = max(perturbation, pert), min(lam_min, low)
            g_u = g.map_coefficients(mpf).affine_x(centre, half_width) * mpf(scale)
            total = total - gram_to_polynomial(clipped, basis) * g_u

        clipped, pert, low = clip_psd(cert.residual_gram)
        perturbation, lam_min = max(perturbation, pert), min(lam_min, low)
        total = total - gram_to_polynomial(clipped, cert.residual_basis)
        residual = total.max_abs_coefficient()

        passed = bool(residual <= tol and perturbation <= tol)
        return RecheckResult(passed, float(residual), float(perturbation), float(lam_min))
