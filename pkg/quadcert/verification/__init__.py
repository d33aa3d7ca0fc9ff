"""
SOS verification of candidate quadratic forms.
"""

from .gram import gram_map, gram_to_polynomial, monomial_basis
from .sos import (
    DegreePolicy,
    FamilyVerdict,
    SOSCertificate,
    SOSOutcome,
    UnionVerdict,
    sos_membership,
    verify_family,
    verify_on_piece,
    verify_union,
    verify_with_policy,
)
from .approx import (
    PolyApprox,
    approx_with_bound,
    build_relaxed_pieces,
    validate_error_bound,
    verification_pieces,
)
from .recheck import RecheckResult, recheck_certificate
from .io import (
    AuditReport,
    audit_family,
    certificate_archive,
    load_verified_forms,
    verified_family,
    write_archive,
    write_verified_family,
)

__all__ = [
    'gram_map',
    'gram_to_polynomial',
    'monomial_basis',
    'DegreePolicy',
    'FamilyVerdict',
    'SOSCertificate',
    'SOSOutcome',
    'UnionVerdict',
    'sos_membership',
    'verify_family',
    'verify_on_piece',
    'verify_union',
    'verify_with_policy',
    'PolyApprox',
    'approx_with_bound',
    'build_relaxed_pieces',
    'validate_error_bound',
    'verification_pieces',
    'RecheckResult',
    'recheck_certificate',
    'AuditReport',
    'audit_family',
    'certificate_archive',
    'load_verified_forms',
    'verified_family',
    'write_archive',
    'write_verified_family',
]
