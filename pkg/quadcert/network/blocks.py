"""
Grouping of unstable ReLU neurons into blocks for the repeated-nonlinearity
constraints.

Neurons are referenced as ``(layer, index)`` pairs with 1-based layers.
"""

from dataclasses import dataclass
from typing import List, Sequence, Tuple

import numpy as np

from quadcert.exceptions import PreconditionError
from quadcert.network.bounds import BoundsState
from quadcert.network.model import Network

STRATEGIES = ("sequential", "cosine")

NeuronRef = Tuple[int, int]


@dataclass(frozen=True)
class BlockPartition:
    blocks: Tuple[Tuple[NeuronRef, ...], ...]
    s_max: int

    def __post_init__(self):
        blocks = tuple(tuple((int(l), int(i)) for l, i in block) for block in self.blocks)
        seen = set()
        for block in blocks:
            if not 1 <= len(block) <= self.s_max:
                raise PreconditionError(f"Block of size {len(block)} violates s_max={self.s_max}")
            for ref in block:
                if ref in seen:
                    raise PreconditionError(f"Neuron {ref} appears in two blocks")
                seen.add(ref)
        object.__setattr__(self, "blocks", blocks)

    def __len__(self):
        return len(self.blocks)

    def __iter__(self):
        return iter(self.blocks)

    @property
    def sizes(self) -> List[int]:
        return [len(b) for b in self.blocks]

    def neurons(self) -> List[NeuronRef]:
        return [ref for block in self.blocks for ref in block]

    def to_record(self) -> dict:
        return {"s_max": self.s_max, "blocks": [[list(ref) for ref in block] for block in self.blocks]}


def unstable_relu_neurons(net: Network, bounds: BoundsState) -> List[NeuronRef]:
    """Stacked list of unstable, non-identity ReLU neurons in layer order."""
    refs = []
    for layer in range(1, net.depth + 1):
        if net.activations[layer - 1] != "relu":
            continue
        mask = net.nonlinear_mask(layer)
        for i in bounds.unstable(layer):
            if mask[i]:
                refs.append((layer, int(i)))
    return refs


def cosine_similarity(W: np.ndarray) -> np.ndarray:
    norms = np.linalg.norm(W, axis=1)
    safe = np.where(norms > 0, norms, 1.0)
    unit = W / safe[:, None]
    sim = unit @ unit.T
    sim[norms == 0, :] = 0.0
    sim[:, norms == 0] = 0.0
    return sim


def _cosine_groups(indices: Sequence[int], W: np.ndarray, s_max: int) -> List[List[int]]:
    """
    Greedy grouping: seed a block with the most similar free pair, then add
    the free neuron most similar to any member until the block is full.
    Ties go to the lower index.
    """
    indices = list(indices)
    if s_max == 1 or len(indices) < 2:
        return [[i] for i in indices]
    sim = cosine_similarity(W[indices])
    n = len(indices)
    free = set(range(n))
    groups = []
    while len(free) > 1:
        best, pair = -np.inf, None
        for a in sorted(free):
            for b in sorted(free):
                if b > a and sim[a, b] > best:
                    best, pair = sim[a, b], (a, b)
        group = list(pair)
        free -= set(pair)
        while len(group) < s_max and free:
            scores = [(max(sim[k, g] for g in group), -k) for k in free]
            _, neg_k = max(scores)
            group.append(-neg_k)
            free.discard(-neg_k)
        groups.append(sorted(group))
    groups.extend([[k] for k in sorted(free)])
    return [[indices[k] for k in group] for group in groups]


def group_blocks(
    net: Network, bounds: BoundsState, s_max: int, strategy: str = "sequential"
) -> BlockPartition:
    """
    Partition the unstable ReLU neurons into blocks of at most ``s_max``.

    ``sequential`` chunks the stacked list and may span layers; ``cosine``
    groups neurons of the same layer whose incoming weight rows point in
    similar directions.
    """
    if s_max < 1:
        raise PreconditionError(f"s_max must be at least 1, got {s_max}")
    if strategy not in STRATEGIES:
        raise PreconditionError(f"Unknown grouping strategy '{strategy}'. Use one of {STRATEGIES}")
    refs = unstable_relu_neurons(net, bounds)
    if strategy == "sequential":
        blocks = [tuple(refs[k : k + s_max]) for k in range(0, len(refs), s_max)]
    else:
        blocks = []
        for layer in sorted({l for l, _ in refs}):
            idx = [i for l, i in refs if l == layer]
            for group in _cosine_groups(idx, net.weights[layer - 1], s_max):
                blocks.append(tuple((layer, i) for i in group))
    return BlockPartition(tuple(blocks), s_max)
