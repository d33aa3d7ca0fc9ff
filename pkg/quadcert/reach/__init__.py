"""
Reachable-set and safety analysis with quadratic constraints and the
S-procedure.
"""

from .analysis import (
    CHARACTERIZATIONS,
    AnalysisContext,
    DisjunctionVerdict,
    FacetResult,
    HalfspaceVerdict,
    ReachPolytope,
    characterization,
    facet_bound,
    not_minimal_rows,
    prepare_analysis,
    reach_polytope,
    solve_facet_bound,
    verify_disjunction,
    verify_halfspace,
    verify_polyhedron,
)
from .directions import average_width, box_directions, facet_lines, output_interval, projection_directions
from .lifted import LiftedBasis
from .lmi import ActivationBlockSpec, LMIAssembly, assemble_lmi, s_matrix
from .qcs import (
    CertFamily,
    InputSetQC,
    builtin_family,
    family_from_file,
    local_bound_qcs,
    relu_exact_qcs,
    repeated_block_matrix,
    sector_qc,
)

__all__ = [
    'CHARACTERIZATIONS',
    'AnalysisContext',
    'DisjunctionVerdict',
    'FacetResult',
    'HalfspaceVerdict',
    'ReachPolytope',
    'characterization',
    'facet_bound',
    'not_minimal_rows',
    'prepare_analysis',
    'reach_polytope',
    'solve_facet_bound',
    'verify_disjunction',
    'verify_halfspace',
    'verify_polyhedron',
    'average_width',
    'box_directions',
    'facet_lines',
    'output_interval',
    'projection_directions',
    'LiftedBasis',
    'ActivationBlockSpec',
    'LMIAssembly',
    'assemble_lmi',
    's_matrix',
    'CertFamily',
    'InputSetQC',
    'builtin_family',
    'family_from_file',
    'local_bound_qcs',
    'relu_exact_qcs',
    'repeated_block_matrix',
    'sector_qc',
]
