"""
quadcert: verified quadratic characterizations of scalar relations and
QC-based SDP analysis of feedforward neural networks.

This package provides data-driven candidate generation for quadratic
constraints, SOS verification of the candidates, and reachability, safety
and bound-tightening analyses that consume the verified constraints.
"""

__version__ = "0.1.0"
__author__ = "Alberto Carta"
__email__ = "your.email@example.com"

# Import main classes for convenient access
from .config import RunConfig
from .forms import QuadraticForm
from .network.model import Network
from .reach.analysis import reach_polytope, verify_disjunction, verify_halfspace
from .relations.relation import ScalarRelation
from .tighten.polytope import tighten_network
from .workflows import WORKFLOWS

__all__ = [
    'RunConfig',
    'QuadraticForm',
    'Network',
    'reach_polytope',
    'verify_disjunction',
    'verify_halfspace',
    'ScalarRelation',
    'tighten_network',
    'WORKFLOWS',
]
