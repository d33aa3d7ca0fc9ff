"""
Layerwise polytope propagation.

For every hidden layer l < L a bounding polytope of the postactivations
theta^l is computed one facet at a time with the network SDP on the prefix
network, then the preactivation intervals of layer l+1 are re-bounded by
linear programs over that polytope and intersected with the current
intervals. The sweep runs once, front to back; reclassified stable neurons
are pruned before the next layer's polytope is built.

LP bounds are read from the dual: for max c^T theta over {A theta <= b} any
y >= 0 gives c^T theta <= b^T y + max over the polytope's box of
(c - A^T y)^T theta, which stays valid when the solver point is inexact.
"""

import time
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np

from quadcert.conic import DEFAULT_TOLERANCES, ConeProgram, ToleranceProfile, solve
from quadcert.exceptions import InconsistencyError, PreconditionError
from quadcert.network.bounds import BoundsState, interval_propagate
from quadcert.network.model import Network
from quadcert.reach.analysis import prepare_analysis, reach_polytope
from quadcert.reach.lmi import ActivationBlockSpec
from quadcert.reach.qcs import CertFamily

PROVENANCES = ("basis", "svd", "pairwise")
DEDUP_COSINE = 1.0 - 1e-9


@dataclass(frozen=True)
class TightenOptions:
    """
    Args:
        svd_count: number t of right-singular vectors of the next weight matrix
        pairwise: add all +-e_i +- e_j directions
        block_repeated: use repeated-ReLU blocks inside the facet SDPs
        block_size: s_max when block_repeated is set
        families: QC families for non-ReLU layers
    """

    svd_count: int = 25
    pairwise: bool = False
    block_repeated: bool = False
    block_size: int = 10
    families: Tuple[CertFamily, ...] = ()

    @classmethod
    def from_record(cls, record: Optional[dict]) -> "TightenOptions":
        record = dict(record or {})
        return cls(
            svd_count=int(record.get("svd_count", 25)),
            pairwise=bool(record.get("pairwise", False)),
            block_repeated=bool(record.get("block_repeated", False)),
            block_size=int(record.get("block_size", 10)),
        )

    def to_record(self) -> dict:
        return {
            "svd_count": self.svd_count,
            "pairwise": self.pairwise,
            "block_repeated": self.block_repeated,
            "block_size": self.block_size,
        }


def facet_directions(n: int, W_next: np.ndarray, svd_count: int = 0, pairwise: bool = False):
    """
    Facet normals for a layer of width n: +-e_i, then +- the top ``svd_count``
    right-singular vectors of W_next, then +-e_i +- e_j if ``pairwise``.
    Near-duplicate directions (cosine above 1 - 1e-9) are dropped.

    Returns:
        (directions, provenance) lists of equal length
    """
    W_next = np.atleast_2d(np.asarray(W_next, dtype=float))
    if svd_count > min(W_next.shape):
        raise PreconditionError(f"svd_count {svd_count} exceeds min dimension {min(W_next.shape)} of W")
    candidates: List[Tuple[np.ndarray, str]] = []
    eye = np.eye(n)
    for i in range(n):
        candidates.extend([(eye[i], "basis"), (-eye[i], "basis")])
    if svd_count > 0:
        _, _, Vt = np.linalg.svd(W_next, full_matrices=False)
        for v in Vt[:svd_count]:
            candidates.extend([(v, "svd"), (-v, "svd")])
    if pairwise:
        for i in range(n):
            for j in range(i + 1, n):
                for si in (1.0, -1.0):
                    for sj in (1.0, -1.0):
                        candidates.append((si * eye[i] + sj * eye[j], "pairwise"))

    directions, provenance, units = [], [], []
    for d, prov in candidates:
        u = d / np.linalg.norm(d)
        if any(float(u @ w) > DEDUP_COSINE for w in units):
            continue
        units.append(u)
        directions.append(d)
        provenance.append(prov)
    return directions, provenance


@dataclass
class LayerPolytope:
    """
    Bounding polytope {theta : A theta <= b} of one layer's postactivations.

    Rows always include +-e_i for every neuron.
    """

    layer: int
    A: np.ndarray
    b: np.ndarray
    provenance: List[str]
    dropped: int = 0

    def box(self) -> np.ndarray:
        """(n, 2) box from the +-e_i rows."""
        n = self.A.shape[1]
        lo, hi = np.full(n, -np.inf), np.full(n, np.inf)
        for a, off in zip(self.A, self.b):
            nz = np.flatnonzero(a)
            if nz.size == 1 and abs(abs(a[nz[0]]) - 1.0) == 0.0:
                i = nz[0]
                if a[i] > 0:
                    hi[i] = min(hi[i], off)
                else:
                    lo[i] = max(lo[i], -off)
        return np.column_stack([lo, hi])

    def contains(self, theta, tol: float = 0.0) -> np.ndarray:
        theta = np.atleast_2d(np.asarray(theta, dtype=float))
        return np.all(theta @ self.A.T <= self.b + tol, axis=1)

    def facet_counts(self) -> dict:
        return {p: self.provenance.count(p) for p in PROVENANCES}

    def to_record(self) -> dict:
        return {"layer": self.layer, "A": self.A, "b": self.b, "provenance": self.provenance,
                "dropped": self.dropped}


def _box_support(a: np.ndarray, box: np.ndarray) -> float:
    return float(np.sum(np.maximum(a * box[:, 0], a * box[:, 1])))


def _prefix_bounds(bounds: BoundsState, layer: int) -> BoundsState:
    return BoundsState(
        bounds.pre[:layer],
        bounds.post[:layer],
        bounds.stability[:layer],
        bounds.input_box,
        bounds.post[layer - 1],
    )


def layer_polytope(
    net: Network,
    layer: int,
    box: np.ndarray,
    bounds: BoundsState,
    directions: Sequence[np.ndarray],
    provenance: Optional[Sequence[str]] = None,
    options: TightenOptions = TightenOptions(),
    tol: ToleranceProfile = DEFAULT_TOLERANCES,
    workers: int = 1,
    debug: bool = False,
) -> LayerPolytope:
    """
    Facet bounds of theta^layer with exact scalar constraints and local bounds.

    Offsets are clipped to the support of the current postactivation box.
    Failed +-e_i facets fall back to that support; other failed facets are
    dropped.
    """
    provenance = list(provenance) if provenance is not None else ["basis"] * len(directions)
    sub = net.truncate(layer)
    act = ActivationBlockSpec(
        f"polytope[{layer}]",
        families=options.families,
        relu_exact=True,
        local_bounds=True,
        block_size=options.block_size if options.block_repeated else None,
    )
    ctx = prepare_analysis(sub, box, act, bounds=_prefix_bounds(bounds, layer), tol=tol)
    poly = reach_polytope(sub, box, act, directions, tol=tol, workers=workers, context=ctx, debug=debug)
    post = bounds.post[layer - 1]

    rows, offsets, prov, dropped = [], [], [], 0
    for facet, kind in zip(poly.facets, provenance):
        support = _box_support(facet.direction, post)
        if facet.ok:
            offsets.append(min(facet.bound, support))
        elif kind == "basis":
            offsets.append(support)
        else:
            dropped += 1
            continue
        rows.append(facet.direction)
        prov.append(kind)
    if debug:
        print(f"Layer {layer}: polytope with {len(rows)} facets ({dropped} dropped)")
    return LayerPolytope(layer, np.array(rows), np.array(offsets), prov, dropped)


def lp_preactivation_bounds(
    poly: LayerPolytope, W: np.ndarray, b: np.ndarray, tol: ToleranceProfile = DEFAULT_TOLERANCES
) -> np.ndarray:
    """
    [min, max] of W_i theta + b_i over the polytope, per row i of W.

    Raises:
        InconsistencyError: the polytope is empty
    """
    W = np.atleast_2d(np.asarray(W, dtype=float))
    b = np.asarray(b, dtype=float).ravel()
    box = poly.box()
    if np.any(box[:, 0] > box[:, 1]):
        raise InconsistencyError(f"Layer {poly.layer} polytope has an empty coordinate range")

    def upper(c: np.ndarray) -> float:
        prog = ConeProgram("lp_bound")
        theta = prog.add_scalar_block("theta", poly.A.shape[1])
        prog.add_rows("facets", [("theta", poly.A)], poly.b, "<=")
        prog.minimize(-(theta @ c))
        outcome = solve(prog, tol)
        if outcome.status == "infeasible":
            raise InconsistencyError(f"Layer {poly.layer} polytope is empty (LP infeasible)")
        if not outcome.usable(True) or outcome.duals.get("facets") is None:
            return _box_support(c, box)
        y = np.maximum(np.asarray(outcome.duals["facets"], dtype=float).ravel(), 0.0)
        residual = c - poly.A.T @ y
        return min(float(poly.b @ y) + _box_support(residual, box), _box_support(c, box))

    out = np.zeros((W.shape[0], 2))
    for i, row in enumerate(W):
        out[i, 1] = upper(row) + b[i]
        out[i, 0] = -upper(-row) + b[i]
    return out


@dataclass
class TighteningReport:
    """Per-layer comparison of interval and tightened preactivation bounds."""

    ibp: List[np.ndarray] = field(default_factory=list)
    tightened: List[np.ndarray] = field(default_factory=list)
    facet_counts: List[dict] = field(default_factory=list)
    options: dict = field(default_factory=dict)

    def width_reduction(self, layer: int) -> np.ndarray:
        """Percent width reduction per neuron (0 for zero-width intervals)."""
        w0 = self.ibp[layer - 1][:, 1] - self.ibp[layer - 1][:, 0]
        w1 = self.tightened[layer - 1][:, 1] - self.tightened[layer - 1][:, 0]
        safe = np.where(w0 > 0, w0, 1.0)
        return np.where(w0 > 0, 100.0 * (w0 - w1) / safe, 0.0)

    def mean_reduction(self, layer: int) -> float:
        red = self.width_reduction(layer)
        return float(red.mean()) if red.size else 0.0

    def to_record(self) -> dict:
        layers = []
        for k, (lo, hi) in enumerate(zip(self.ibp, self.tightened), start=1):
            layers.append(
                {
                    "layer": k,
                    "mean_width_reduction_percent": self.mean_reduction(k),
                    "facets": self.facet_counts[k - 1] if k - 1 < len(self.facet_counts) else {},
                    "ibp": lo,
                    "tightened": hi,
                    "reduction_percent": self.width_reduction(k),
                }
            )
        return {"kind": "tightening_report", "options": self.options, "layers": layers}


def tighten_network_report(
    net: Network,
    box,
    options: Optional[TightenOptions] = None,
    workers: int = 1,
    tol: ToleranceProfile = DEFAULT_TOLERANCES,
    debug: bool = False,
) -> Tuple[BoundsState, TighteningReport]:
    """Tightened bounds together with the per-layer report."""
    options = options or TightenOptions()
    box = net.input_box if box is None else np.asarray(box, dtype=float).reshape(-1, 2)
    ibp = interval_propagate(net, box)
    bounds, fixed = ibp, {}
    report = TighteningReport(options=options.to_record())
    report.facet_counts.append({})
    start = time.perf_counter()
    for layer in range(1, net.depth):
        W_next, b_next = net.weights[layer], net.biases[layer]
        t = min(options.svd_count, min(W_next.shape))
        dirs, prov = facet_directions(net.hidden_sizes[layer - 1], W_next, t, options.pairwise)
        poly = layer_polytope(net, layer, box, bounds, dirs, prov, options, tol, workers, debug)
        fixed[layer + 1] = lp_preactivation_bounds(poly, W_next, b_next, tol)
        bounds = interval_propagate(net, box, fixed_pre=fixed)
        pre = bounds.pre[layer]
        if np.any(pre[:, 0] > pre[:, 1] + 1e-9):
            raise InconsistencyError(f"Tightened bounds of layer {layer + 1} are empty")
        report.facet_counts.append(poly.facet_counts())
        if debug:
            red = 100.0 * (1.0 - np.sum(pre[:, 1] - pre[:, 0]) / max(np.sum(ibp.widths(layer + 1)), 1e-300))
            print(f"Layer {layer + 1}: total preactivation width reduced by {red:.1f}%")
    if debug:
        print(f"Tightening finished in {time.perf_counter() - start:.2f} s")
    report.ibp = list(ibp.pre)
    report.tightened = list(bounds.pre)
    return bounds, report


def tighten_network(
    net: Network,
    box,
    options: Optional[TightenOptions] = None,
    workers: int = 1,
    tol: ToleranceProfile = DEFAULT_TOLERANCES,
    debug: bool = False,
) -> BoundsState:
    """Bounds after one front-to-back sweep of polytope propagation."""
    bounds, _ = tighten_network_report(net, box, options, workers, tol, debug)
    return bounds
