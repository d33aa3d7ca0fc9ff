"""
Local-bound tightening by layerwise polytope propagation.
"""

from .polytope import (
    LayerPolytope,
    TighteningReport,
    TightenOptions,
    facet_directions,
    layer_polytope,
    lp_preactivation_bounds,
    tighten_network,
    tighten_network_report,
)

__all__ = [
    'LayerPolytope',
    'TighteningReport',
    'TightenOptions',
    'facet_directions',
    'layer_polytope',
    'lp_preactivation_bounds',
    'tighten_network',
    'tighten_network_report',
]
