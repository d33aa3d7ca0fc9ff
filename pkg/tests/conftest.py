"""
Pytest configuration for quadcert tests.
"""

import os
import sys

import numpy as np
import pytest

# Add the parent directory to the path so we can import quadcert
sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from quadcert.network import Network, load_network, random_network  # noqa: E402
from quadcert.relations import load_relation  # noqa: E402


@pytest.fixture
def sat_relation():
    """Bundled saturation relation: three exact pieces on [-5, 5]."""
    return load_relation("bundled:sat.json")


@pytest.fixture
def tanh_relation():
    """Bundled tanh relation with its verification partition."""
    return load_relation("bundled:tanh.json")


@pytest.fixture
def one_neuron():
    """y = relu(x) on x in [-1, 1]."""
    return load_network("bundled:one_neuron.json")


@pytest.fixture
def tied_outputs():
    """Two-output ReLU network with y2 = y1 - 1."""
    return load_network("bundled:tied_outputs.json")


@pytest.fixture
def small_relu_net():
    """Seeded 2-8-8-2 ReLU network with a unit input box."""
    net = random_network([2, 8, 8, 2], seed=3)
    return net.replace(input_box=np.array([[-1.0, 1.0], [-1.0, 1.0]]))


@pytest.fixture
def unit_box_2d():
    return np.array([[-1.0, 1.0], [-1.0, 1.0]])


@pytest.fixture
def linear_net():
    """One hidden identity layer: y = 2 x1 - x2 + 0.5."""
    return Network(
        (np.array([[1.0, 0.0], [0.0, 1.0]]), np.array([[2.0, -1.0]])),
        (np.zeros(2), np.array([0.5])),
        ("identity",),
        input_box=np.array([[-1.0, 1.0], [-1.0, 1.0]]),
        name="linear",
    )
