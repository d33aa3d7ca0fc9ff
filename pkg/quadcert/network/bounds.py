"""
Interval bound propagation, stability classification and pruning of stable
ReLU neurons.
"""

from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

import numpy as np

from quadcert.exceptions import PreconditionError
from quadcert.network.model import ACTIVATION_FUNCS, Network

STABILITIES = ("inactive", "active", "unstable")


@dataclass(frozen=True, eq=False)
class BoundsState:
    """
    Per-neuron bounds of every hidden layer.

    Args:
        pre: per layer, (n_l, 2) preactivation intervals
        post: per layer, (n_l, 2) postactivation intervals
        stability: per layer, a tuple of labels for ReLU layers, None otherwise
        input_box: (n_x, 2) box the bounds were propagated from
        output: (n_y, 2) output box
    """

    pre: Tuple[np.ndarray, ...]
    post: Tuple[np.ndarray, ...]
    stability: Tuple[Optional[Tuple[str, ...]], ...]
    input_box: np.ndarray
    output: Optional[np.ndarray] = None

    @property
    def depth(self) -> int:
        return len(self.pre)

    def counts(self) -> List[Dict[str, int]]:
        """Number of inactive, active and unstable neurons per ReLU layer."""
        result = []
        for stab in self.stability:
            if stab is None:
                result.append({})
            else:
                result.append({s: stab.count(s) for s in STABILITIES})
        return result

    def unstable(self, layer: int) -> np.ndarray:
        stab = self.stability[layer - 1]
        if stab is None:
            return np.arange(self.pre[layer - 1].shape[0])
        return np.array([i for i, s in enumerate(stab) if s == "unstable"], dtype=int)

    def widths(self, layer: int) -> np.ndarray:
        pre = self.pre[layer - 1]
        return pre[:, 1] - pre[:, 0]


def _affine_interval(W, b, box):
    Wp, Wn = np.maximum(W, 0.0), np.minimum(W, 0.0)
    lo = Wp @ box[:, 0] + Wn @ box[:, 1] + b
    hi = Wp @ box[:, 1] + Wn @ box[:, 0] + b
    return np.column_stack([lo, hi])


def classify(pre: np.ndarray, overrides: np.ndarray) -> Tuple[str, ...]:
    labels = []
    for (lo, hi), identity in zip(pre, overrides):
        if identity or lo >= 0:
            labels.append("active")
        elif hi <= 0:
            labels.append("inactive")
        else:
            labels.append("unstable")
    return tuple(labels)


def layer_post(net: Network, layer: int, pre: np.ndarray) -> np.ndarray:
    """Postactivation box of a layer; every activation used here is monotone."""
    func = ACTIVATION_FUNCS[net.activations[layer - 1]]
    post = np.column_stack([func(pre[:, 0]), func(pre[:, 1])])
    mask = net.identity_overrides[layer - 1]
    post[mask] = pre[mask]
    return post


def interval_propagate(
    net: Network, box: Optional[np.ndarray] = None, fixed_pre: Optional[Dict[int, np.ndarray]] = None
) -> BoundsState:
    """
    Interval arithmetic through the network.

    Affine maps split W into positive and negative parts; activations are
    monotone so their intervals come from the endpoints. ``fixed_pre`` maps a
    layer index to externally computed preactivation intervals that are
    intersected with the propagated ones.

    Raises:
        PreconditionError: missing or malformed box
    """
    box = net.input_box if box is None else np.asarray(box, dtype=float).reshape(-1, 2)
    if box is None:
        raise PreconditionError(f"Network '{net.name}' has no input box")
    if box.shape[0] != net.n_x or np.any(box[:, 0] > box[:, 1]):
        raise PreconditionError(f"Input box must have {net.n_x} rows of [lo, hi] with lo <= hi")
    fixed_pre = fixed_pre or {}

    current = box
    pres, posts, stabs = [], [], []
    for layer in range(1, net.depth + 1):
        pre = _affine_interval(net.weights[layer - 1], net.biases[layer - 1], current)
        if layer in fixed_pre:
            other = np.asarray(fixed_pre[layer], dtype=float)
            pre = np.column_stack([np.maximum(pre[:, 0], other[:, 0]), np.minimum(pre[:, 1], other[:, 1])])
        post = layer_post(net, layer, pre)
        stab = None
        if net.activations[layer - 1] == "relu":
            stab = classify(pre, net.identity_overrides[layer - 1])
        pres.append(pre)
        posts.append(post)
        stabs.append(stab)
        current = post
    output = _affine_interval(net.weights[-1], net.biases[-1], current)
    return BoundsState(tuple(pres), tuple(posts), tuple(stabs), box, output)


@dataclass(frozen=True, eq=False)
class PruneResult:
    """
    Args:
        network: reduced network
        index_map: per layer, original indices of the kept neurons
        identity_overrides: per layer, mask of kept neurons retagged identity
        bounds: bounds restricted to the kept neurons
        removed: per layer, original indices of removed neurons
    """

    network: Network
    index_map: Tuple[np.ndarray, ...]
    identity_overrides: Tuple[np.ndarray, ...]
    bounds: BoundsState
    removed: Tuple[np.ndarray, ...] = field(default=())

    @property
    def n_removed(self) -> int:
        return int(sum(r.size for r in self.removed))

    @property
    def n_identity(self) -> int:
        return int(sum(m.sum() for m in self.identity_overrides))


def prune_stable(net: Network, bounds: BoundsState) -> PruneResult:
    """
    Remove always-inactive ReLU neurons and retag always-active ones as
    identity. The reduced network computes the same function on the box.
    """
    if bounds.depth != net.depth:
        raise PreconditionError("Bounds do not match the network depth")
    weights = [W.copy() for W in net.weights]
    biases = [b.copy() for b in net.biases]
    overrides, index_map, removed = [], [], []
    pres, posts, stabs = [], [], []
    for layer in range(1, net.depth + 1):
        k = layer - 1
        stab = bounds.stability[k]
        n = weights[k].shape[0]
        if stab is None:
            keep = np.ones(n, dtype=bool)
            active = net.identity_overrides[k].copy()
        else:
            keep = np.array([s != "inactive" for s in stab], dtype=bool)
            active = np.array([s == "active" for s in stab], dtype=bool)
        weights[k] = weights[k][keep]
        biases[k] = biases[k][keep]
        weights[k + 1] = weights[k + 1][:, keep]
        overrides.append(active[keep])
        index_map.append(np.flatnonzero(keep))
        removed.append(np.flatnonzero(~keep))
        pres.append(bounds.pre[k][keep])
        posts.append(bounds.post[k][keep])
        stabs.append(None if stab is None else tuple(s for s, kept in zip(stab, keep) if kept))

    reduced = Network(
        tuple(weights),
        tuple(biases),
        net.activations,
        identity_overrides=tuple(overrides),
        input_box=net.input_box,
        name=net.name,
    )
    reduced_bounds = BoundsState(tuple(pres), tuple(posts), tuple(stabs), bounds.input_box, bounds.output)
    return PruneResult(reduced, tuple(index_map), tuple(overrides), reduced_bounds, tuple(removed))
