"""
Lifted trajectory vector and its extraction maps.

    xi = [x; theta_nl^1; ...; theta_nl^L; 1]

where theta_nl^l holds the postactivations of the nonlinear neurons of layer
l. Identity neurons (identity-tagged layers and identity overrides) are not
part of xi: their output equals their preactivation, which is affine in the
previous layer and is substituted directly.

Every map below is a matrix with N = dim(xi) columns; the last column is the
constant coordinate.
"""

from typing import Dict, List, Tuple

import numpy as np
import scipy.sparse as sp

from quadcert.network.bounds import BoundsState
from quadcert.network.model import Network, forward_trace


class LiftedBasis:
    """
    Extraction maps for a network.

    Attributes:
        dim: N = n_x + (number of nonlinear neurons) + 1
        phi_maps: per layer, (n_l, N) matrix giving phi^l
        theta_maps: per layer, (n_l, N) matrix giving theta^l
        positions: (layer, i) -> column of theta_i^l in xi, nonlinear neurons only
    """

    def __init__(self, net: Network):
        self.net = net
        self.n_x = net.n_x
        self.positions: Dict[Tuple[int, int], int] = {}
        col = net.n_x
        for layer in range(1, net.depth + 1):
            for i in np.flatnonzero(net.nonlinear_mask(layer)):
                self.positions[(layer, int(i))] = col
                col += 1
        self.dim = col + 1
        self.const = col

        N = self.dim
        prev = np.zeros((net.n_x, N))
        prev[:, : net.n_x] = np.eye(net.n_x)
        self.phi_maps: List[np.ndarray] = []
        self.theta_maps: List[np.ndarray] = []
        for layer in range(1, net.depth + 1):
            W, b = net.weights[layer - 1], net.biases[layer - 1]
            phi = W @ prev
            phi[:, self.const] += b
            theta = phi.copy()
            for i in np.flatnonzero(net.nonlinear_mask(layer)):
                theta[i] = 0.0
                theta[i, self.positions[(layer, int(i))]] = 1.0
            self.phi_maps.append(phi)
            self.theta_maps.append(theta)
            prev = theta
        out = net.weights[-1] @ prev
        out[:, self.const] += net.biases[-1]
        self.output_map = out

    @property
    def n_nonlinear(self) -> int:
        return len(self.positions)

    def _unit(self) -> np.ndarray:
        e = np.zeros((1, self.dim))
        e[0, self.const] = 1.0
        return e

    @property
    def E_x(self) -> np.ndarray:
        """(n_x + 1, N): xi -> [x; 1]."""
        top = np.zeros((self.n_x, self.dim))
        top[:, : self.n_x] = np.eye(self.n_x)
        return np.vstack([top, self._unit()])

    @property
    def E_y(self) -> np.ndarray:
        """(n_y + 1, N): xi -> [y; 1]."""
        return np.vstack([self.output_map, self._unit()])

    def E_neuron(self, layer: int, i: int) -> sp.csr_matrix:
        """(3, N): xi -> [phi_i; theta_i; 1]."""
        rows = np.vstack([self.phi_maps[layer - 1][i], self.theta_maps[layer - 1][i], self._unit()])
        return sp.csr_matrix(rows)

    def E_block(self, refs) -> np.ndarray:
        """(2s, N): xi -> [phi_block; theta_block], no constant row."""
        phis = [self.phi_maps[l - 1][i] for l, i in refs]
        thetas = [self.theta_maps[l - 1][i] for l, i in refs]
        return np.vstack(phis + thetas)

    def lift(self, x) -> np.ndarray:
        """xi for a batch of inputs (n, n_x) -> (n, N), from the true trajectory."""
        x = np.atleast_2d(np.asarray(x, dtype=float))
        _, posts, _ = forward_trace(self.net, x)
        xi = np.zeros((x.shape[0], self.dim))
        xi[:, : self.n_x] = x
        for (layer, i), col in self.positions.items():
            xi[:, col] = posts[layer - 1][:, i]
        xi[:, self.const] = 1.0
        return xi

    def norm_bound(self, bounds: BoundsState) -> float:
        """R^2 >= ||xi||^2 over the box the bounds were computed on."""
        box = np.asarray(bounds.input_box, dtype=float)
        total = float(np.sum(np.max(box**2, axis=1))) + 1.0
        for (layer, i) in self.positions:
            lo, hi = bounds.post[layer - 1][i]
            total += max(lo * lo, hi * hi)
        return total
