"""
Scalar relations, polynomial arithmetic and sample generation.
"""

from .polynomial import Polynomial2, interval_constraint
from .registry import EVALUATORS, Evaluator, get_evaluator
from .relation import (
    GRAPH_TOL,
    ScalarRelation,
    SemialgebraicPiece,
    apply_odd_symmetry,
    eval_graph,
    eval_relation,
)
from .sampling import (
    EXTERIOR_SEPARATION,
    SampleSet,
    anchor_points,
    check_on_graph,
    sample_exterior,
    sample_graph,
)
from .io import dump_relation, load_relation, relation_digest

__all__ = [
    'Polynomial2',
    'interval_constraint',
    'EVALUATORS',
    'Evaluator',
    'get_evaluator',
    'GRAPH_TOL',
    'ScalarRelation',
    'SemialgebraicPiece',
    'apply_odd_symmetry',
    'eval_graph',
    'eval_relation',
    'EXTERIOR_SEPARATION',
    'SampleSet',
    'anchor_points',
    'check_on_graph',
    'sample_exterior',
    'sample_graph',
    'dump_relation',
    'load_relation',
    'relation_digest',
]
