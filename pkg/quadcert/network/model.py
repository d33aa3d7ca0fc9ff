"""
Feedforward network model.

    theta^0 = x
    phi^l   = W^l theta^(l-1) + b^l          l = 1..L
    theta^l = sigma(phi^l)
    y       = W^(L+1) theta^L + b^(L+1)

Each hidden layer has one activation tag; single neurons may be overridden
to the identity (used for always-active ReLUs after pruning).
"""

from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np

from quadcert.exceptions import PreconditionError

ACTIVATIONS = ("relu", "tanh", "sat", "identity")

ACTIVATION_FUNCS = {
    "relu": lambda v: np.maximum(v, 0.0),
    "tanh": np.tanh,
    "sat": lambda v: np.clip(v, -1.0, 1.0),
    "identity": lambda v: v,
}


@dataclass(frozen=True, eq=False)
class Network:
    """
    Args:
        weights: W^1 .. W^(L+1)
        biases: b^1 .. b^(L+1)
        activations: one tag per hidden layer
        identity_overrides: per hidden layer, boolean mask of neurons acting as identity
        input_box: optional (n_x, 2) array of input bounds stored with the network
        name: label used in artifacts
    """

    weights: Tuple[np.ndarray, ...]
    biases: Tuple[np.ndarray, ...]
    activations: Tuple[str, ...]
    identity_overrides: Tuple[np.ndarray, ...] = ()
    input_box: Optional[np.ndarray] = None
    name: str = ""

    def __post_init__(self):
        weights = tuple(np.atleast_2d(np.asarray(W, dtype=float)) for W in self.weights)
        biases = tuple(np.atleast_1d(np.asarray(b, dtype=float)) for b in self.biases)
        activations = tuple(self.activations)
        if len(weights) < 1 or len(weights) != len(biases):
            raise PreconditionError("Network needs matching, nonempty weight and bias lists")
        if len(activations) != len(weights) - 1:
            raise PreconditionError(
                f"{len(weights) - 1} hidden layers but {len(activations)} activation tags"
            )
        for tag in activations:
            if tag not in ACTIVATIONS:
                raise PreconditionError(f"Unknown activation '{tag}'. Use one of {ACTIVATIONS}")
        for k, (W, b) in enumerate(zip(weights, biases), start=1):
            if W.shape[0] != b.shape[0]:
                raise PreconditionError(f"Layer {k}: W has {W.shape[0]} rows, b has {b.shape[0]} entries")
            if k > 1 and W.shape[1] != weights[k - 2].shape[0]:
                raise PreconditionError(
                    f"Layer {k}: W has {W.shape[1]} columns, "
                    f"previous layer has {weights[k - 2].shape[0]} neurons"
                )
            if not (np.all(np.isfinite(W)) and np.all(np.isfinite(b))):
                raise PreconditionError(f"Layer {k} has non-finite entries")

        overrides = self.identity_overrides or tuple(np.zeros(W.shape[0], dtype=bool) for W in weights[:-1])
        overrides = tuple(np.asarray(m, dtype=bool) for m in overrides)
        if len(overrides) != len(activations) or any(
            m.shape != (W.shape[0],) for m, W in zip(overrides, weights[:-1])
        ):
            raise PreconditionError("identity_overrides must give one mask per hidden layer")

        box = self.input_box
        if box is not None:
            box = np.asarray(box, dtype=float).reshape(-1, 2)
            if box.shape[0] != weights[0].shape[1] or np.any(box[:, 0] > box[:, 1]):
                raise PreconditionError("input_box must have one [lo, hi] row per input")

        object.__setattr__(self, "weights", weights)
        object.__setattr__(self, "biases", biases)
        object.__setattr__(self, "activations", activations)
        object.__setattr__(self, "identity_overrides", overrides)
        object.__setattr__(self, "input_box", box)

    @property
    def n_x(self) -> int:
        return self.weights[0].shape[1]

    @property
    def n_y(self) -> int:
        return self.weights[-1].shape[0]

    @property
    def depth(self) -> int:
        """Number of hidden layers L."""
        return len(self.activations)

    @property
    def hidden_sizes(self) -> List[int]:
        return [W.shape[0] for W in self.weights[:-1]]

    def nonlinear_mask(self, layer: int) -> np.ndarray:
        """Neurons of hidden layer ``layer`` (1-based) that are not identity."""
        if self.activations[layer - 1] == "identity":
            return np.zeros(self.hidden_sizes[layer - 1], dtype=bool)
        return ~self.identity_overrides[layer - 1]

    def activate(self, layer: int, pre: np.ndarray) -> np.ndarray:
        post = ACTIVATION_FUNCS[self.activations[layer - 1]](pre)
        return np.where(self.identity_overrides[layer - 1], pre, post)

    def replace(self, **changes) -> "Network":
        fields_ = dict(
            weights=self.weights,
            biases=self.biases,
            activations=self.activations,
            identity_overrides=self.identity_overrides,
            input_box=self.input_box,
            name=self.name,
        )
        fields_.update(changes)
        return Network(**fields_)

    def truncate(self, layer: int) -> "Network":
        """Prefix network whose output is the postactivation theta^layer."""
        if not 1 <= layer <= self.depth:
            raise PreconditionError(f"Layer {layer} outside 1..{self.depth}")
        n = self.hidden_sizes[layer - 1]
        return Network(
            weights=self.weights[:layer] + (np.eye(n),),
            biases=self.biases[:layer] + (np.zeros(n),),
            activations=self.activations[:layer],
            identity_overrides=self.identity_overrides[:layer],
            input_box=self.input_box,
            name=f"{self.name}[:{layer}]",
        )


def forward_trace(net: Network, x) -> Tuple[List[np.ndarray], List[np.ndarray], np.ndarray]:
    """
    Preactivations, postactivations and outputs for a batch.

    ``x`` is (n_x,) or (n, n_x); returned arrays keep the batch axis first.
    """
    theta = np.atleast_2d(np.asarray(x, dtype=float))
    if theta.shape[1] != net.n_x:
        raise PreconditionError(f"Input has {theta.shape[1]} entries, network expects {net.n_x}")
    pres, posts = [], []
    for layer in range(1, net.depth + 1):
        phi = theta @ net.weights[layer - 1].T + net.biases[layer - 1]
        theta = net.activate(layer, phi)
        pres.append(phi)
        posts.append(theta)
    y = theta @ net.weights[-1].T + net.biases[-1]
    return pres, posts, y


def forward_eval(net: Network, x) -> np.ndarray:
    """Network output; a single input gives a 1-D output vector."""
    _, _, y = forward_trace(net, x)
    return y[0] if np.ndim(x) == 1 else y


def sample_box(box: np.ndarray, n: int, seed: int = 0) -> np.ndarray:
    """n uniform points in the box given as (n_x, 2) rows of [lo, hi]."""
    box = np.asarray(box, dtype=float)
    rng = np.random.default_rng(seed)
    return box[:, 0] + (box[:, 1] - box[:, 0]) * rng.random((n, box.shape[0]))


def random_network(
    sizes: Sequence[int], seed: int = 0, activation: str = "relu", bias_scale: float = 0.5, name: str = ""
) -> Network:
    """
    Seeded random network with layer sizes [n_x, n_1, ..., n_L, n_y].

    Weights are N(0, 1/fan_in), biases N(0, bias_scale^2).
    """
    if len(sizes) < 2:
        raise PreconditionError("sizes needs at least input and output dimensions")
    rng = np.random.default_rng(seed)
    weights, biases = [], []
    for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
        weights.append(rng.standard_normal((fan_out, fan_in)) / np.sqrt(fan_in))
        biases.append(bias_scale * rng.standard_normal(fan_out))
    return Network(
        tuple(weights),
        tuple(biases),
        tuple([activation] * (len(sizes) - 2)),
        name=name or f"random{list(sizes)}-{seed}",
    )
