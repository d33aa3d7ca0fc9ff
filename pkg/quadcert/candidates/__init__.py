"""
Candidate quadratic forms from sampled convex QPs.
"""

from .qp import CandidateSpec, SlackReport, assemble_candidate_qp, solve_candidate
from .propose import SubdomainRecipe, build_samples, generate_candidates, mirror_candidate
from .io import CandidateFamily, read_family, write_family

__all__ = [
    'CandidateSpec',
    'SlackReport',
    'assemble_candidate_qp',
    'solve_candidate',
    'SubdomainRecipe',
    'build_samples',
    'generate_candidates',
    'mirror_candidate',
    'CandidateFamily',
    'read_family',
    'write_family',
]
