"""
Feedforward networks: model, file formats, interval bounds, pruning and
neuron blocks.
"""

from .blocks import BlockPartition, group_blocks, unstable_relu_neurons
from .bounds import BoundsState, PruneResult, interval_propagate, prune_stable
from .io import bounds_report, load_box, load_network, parse_nnet, save_network
from .model import ACTIVATIONS, Network, forward_eval, forward_trace, random_network, sample_box

__all__ = [
    'BlockPartition',
    'group_blocks',
    'unstable_relu_neurons',
    'BoundsState',
    'PruneResult',
    'interval_propagate',
    'prune_stable',
    'bounds_report',
    'load_box',
    'load_network',
    'parse_nnet',
    'save_network',
    'ACTIVATIONS',
    'Network',
    'forward_eval',
    'forward_trace',
    'random_network',
    'sample_box',
]
