"""
Cone program assembly and the solver boundary.
"""

from .program import ConeProgram, symmetric_from_packed
from .solve import DEFAULT_TOLERANCES, STATUSES, SolveOutcome, ToleranceProfile, solve

__all__ = [
    'ConeProgram',
    'symmetric_from_packed',
    'DEFAULT_TOLERANCES',
    'STATUSES',
    'SolveOutcome',
    'ToleranceProfile',
    'solve',
]
