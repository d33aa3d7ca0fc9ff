"""
Reachability and safety analysis on top of the network LMI.

A facet bound for direction a is the smallest b for which the LMI with
S(a, b) is feasible, inflated by max(0, lambda_max(M)) * R^2 / 2 evaluated
at the returned multipliers. The inflation turns a solver point that is only
feasible to tolerance into a bound that holds for the exact trajectories.
"""

import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np

from quadcert.conic import DEFAULT_TOLERANCES, ToleranceProfile, solve
from quadcert.exceptions import PreconditionError
from quadcert.network.bounds import BoundsState, PruneResult, interval_propagate, prune_stable
from quadcert.network.model import Network
from quadcert.reach.lmi import (
    ActivationBlockSpec,
    DisjunctionTerm,
    FacetTerm,
    HalfspaceTerm,
    LMIAssembly,
    assemble_lmi,
)
from quadcert.reach.qcs import CertFamily, InputSetQC
from quadcert.utils.reporting import progress

CHARACTERIZATIONS = ("EP", "COMB", "COMB-PP")
VERDICT_TOL = 1e-6
ACTIVE_MULTIPLIER = 1e-6


def characterization(
    name: str,
    block_size: int = 10,
    block_strategy: str = "sequential",
    families: Sequence[CertFamily] = (),
    relu_complementarity: str = "inequality",
) -> ActivationBlockSpec:
    """
    EP: exact scalar ReLU constraints and local bounds.
    COMB: EP plus repeated-ReLU blocks of size ``block_size``.
    COMB-PP: COMB on bounds tightened by polytope propagation.
    """
    if name == "EP":
        return ActivationBlockSpec(
            name,
            families=tuple(families),
            relu_exact=True,
            local_bounds=True,
            relu_complementarity=relu_complementarity,
        )
    if name in ("COMB", "COMB-PP"):
        return ActivationBlockSpec(
            name,
            families=tuple(families),
            relu_exact=True,
            local_bounds=True,
            block_size=block_size,
            block_strategy=block_strategy,
            relu_complementarity=relu_complementarity,
            bounds_source="tightened" if name == "COMB-PP" else "ibp",
        )
    raise PreconditionError(
        f"Unknown characterization '{name}'. Use one of {CHARACTERIZATIONS}"
    )


@dataclass
class AnalysisContext:
    """Pruned network, its bounds and the shared LMI data."""

    network: Network
    bounds: BoundsState
    input_set: InputSetQC
    assembly: LMIAssembly
    prune: Optional[PruneResult] = None

    @property
    def lifted_dim(self) -> int:
        return self.assembly.dim


def _input_set(input_set) -> InputSetQC:
    if isinstance(input_set, InputSetQC):
        return input_set
    return InputSetQC.from_box(input_set)


def prepare_analysis(
    net: Network,
    input_set: Union[InputSetQC, np.ndarray],
    act: ActivationBlockSpec,
    bounds: Optional[BoundsState] = None,
    prune: bool = True,
    tighten_options=None,
    workers: int = 1,
    tol: ToleranceProfile = DEFAULT_TOLERANCES,
    debug: bool = False,
) -> AnalysisContext:
    """
    Bounds (interval or tightened, per ``act.bounds_source``), pruning of
    stable ReLU neurons and LMI assembly.
    """
    input_set = _input_set(input_set)
    if input_set.box is None:
        raise PreconditionError("Input set needs a bounding box")
    if bounds is None:
        if act.bounds_source == "tightened":
            from quadcert.tighten.polytope import tighten_network

            bounds = tighten_network(
                net, input_set.box, tighten_options, workers=workers, tol=tol, debug=debug
            )
        else:
            bounds = interval_propagate(net, input_set.box)
    pruned = None
    if prune and "relu" in net.activations:
        pruned = prune_stable(net, bounds)
        net, bounds = pruned.network, pruned.bounds
        if debug:
            print(f"Pruning: removed {pruned.n_removed} inactive, {pruned.n_identity} identity neurons")
    assembly = assemble_lmi(net, None, input_set, act, bounds)
    if debug:
        print(
            f"LMI '{act.name}': lifted dimension {assembly.dim}, "
            f"multipliers {assembly.multiplier_counts()}"
        )
    return AnalysisContext(net, bounds, input_set, assembly, pruned)


@dataclass
class FacetResult:
    """
    Args:
        direction: facet normal a
        bound: certified offset b (inf when the solve failed)
        raw: solver objective before inflation
        inflation: max(0, lambda_max(M)) * R^2 / 2
        status: solver status
        diagnostics: solver summary without timing
    """

    direction: np.ndarray
    bound: float
    raw: Optional[float] = None
    inflation: float = 0.0
    status: str = "optimal"
    diagnostics: dict = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return bool(np.isfinite(self.bound))

    def to_record(self) -> dict:
        return {
            "direction": self.direction,
            "bound": self.bound if self.ok else None,
            "raw": self.raw,
            "inflation": self.inflation,
            "status": self.status,
            "diagnostics": self.diagnostics,
        }


def facet_bound(ctx: AnalysisContext, a, tol: ToleranceProfile = DEFAULT_TOLERANCES) -> FacetResult:
    term = FacetTerm(a)
    outcome = solve(ctx.assembly.program(term, name="facet"), tol)
    if not outcome.usable(tol.accept_inaccurate):
        return FacetResult(term.a, np.inf, status=outcome.status, diagnostics=outcome.diagnostics())
    raw = float(outcome.value("b")[0])
    inflation = ctx.assembly.inflation(outcome.values, term)
    return FacetResult(term.a, raw + inflation, raw, inflation, outcome.status, outcome.diagnostics())


def solve_facet_bound(
    net: Network,
    input_set,
    act: ActivationBlockSpec,
    a,
    bounds: Optional[BoundsState] = None,
    tol: ToleranceProfile = DEFAULT_TOLERANCES,
    context: Optional[AnalysisContext] = None,
) -> float:
    """Offset b with a^T y <= b on the input set; inf if the solve failed."""
    ctx = context or prepare_analysis(net, input_set, act, bounds, tol=tol)
    return facet_bound(ctx, a, tol).bound


@dataclass
class ReachPolytope:
    """Polytope {y : a_j^T y <= b_j} from the successful facets."""

    facets: List[FacetResult]
    n_y: int
    name: str = ""

    @property
    def kept(self) -> List[FacetResult]:
        return [f for f in self.facets if f.ok]

    @property
    def failed(self) -> List[FacetResult]:
        return [f for f in self.facets if not f.ok]

    @property
    def A(self) -> np.ndarray:
        return np.array([f.direction for f in self.kept]).reshape(-1, self.n_y)

    @property
    def b(self) -> np.ndarray:
        return np.array([f.bound for f in self.kept])

    def contains(self, y, tol: float = 0.0) -> np.ndarray:
        y = np.atleast_2d(np.asarray(y, dtype=float))
        return np.all(y @ self.A.T <= self.b + tol, axis=1)

    def support(self, direction) -> float:
        """Bound of the facet with exactly this direction (inf if absent)."""
        direction = np.asarray(direction, dtype=float)
        for f in self.kept:
            if np.allclose(f.direction, direction, rtol=0, atol=1e-12):
                return f.bound
        return np.inf

    def to_record(self) -> dict:
        return {
            "kind": "polytope",
            "name": self.name,
            "n_y": self.n_y,
            "A": self.A,
            "b": self.b,
            "facets": [f.to_record() for f in self.facets],
        }


def _map(func, items, workers: int, title: str, debug: bool):
    items = list(items)
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(progress(pool.map(func, items), len(items), title, enabled=debug))
    return [func(item) for item in progress(items, len(items), title, enabled=debug)]


def reach_polytope(
    net: Network,
    input_set,
    act: ActivationBlockSpec,
    directions: Sequence,
    bounds: Optional[BoundsState] = None,
    tol: ToleranceProfile = DEFAULT_TOLERANCES,
    workers: int = 1,
    context: Optional[AnalysisContext] = None,
    debug: bool = False,
) -> ReachPolytope:
    """One facet solve per direction; failed facets are kept as diagnostics only."""
    directions = [np.asarray(a, dtype=float).ravel() for a in directions]
    if not directions:
        raise PreconditionError("reach_polytope needs at least one direction")
    ctx = context or prepare_analysis(net, input_set, act, bounds, workers=workers, tol=tol, debug=debug)
    facets = _map(lambda a: facet_bound(ctx, a, tol), directions, workers, f"facets {act.name}", debug)
    poly = ReachPolytope(facets, net.n_y, name=act.name)
    if debug:
        print(f"Polytope '{act.name}': {len(poly.kept)} facets, {len(poly.failed)} failed")
    for f in poly.failed:
        warnings.warn(f"Facet {np.array2string(f.direction, precision=4)} dropped (status {f.status})")
    return poly


@dataclass
class HalfspaceVerdict:
    """
    ``verified`` means c^T y <= certified_bound on the input set, with
    certified_bound = d + inflation and inflation below the verdict tolerance.
    """

    c: np.ndarray
    d: float
    verified: bool
    certified_bound: Optional[float] = None
    inflation: Optional[float] = None
    status: str = ""
    diagnostics: dict = field(default_factory=dict)

    @property
    def verdict(self) -> str:
        return "verified" if self.verified else "unknown"

    def to_record(self) -> dict:
        return {
            "c": self.c,
            "d": self.d,
            "verdict": self.verdict,
            "certified_bound": self.certified_bound,
            "inflation": self.inflation,
            "status": self.status,
            "diagnostics": self.diagnostics,
        }


def _tolerance(d: float) -> float:
    return VERDICT_TOL * max(1.0, abs(d))


def halfspace_verdict(
    ctx: AnalysisContext, c, d: float, tol: ToleranceProfile = DEFAULT_TOLERANCES
) -> HalfspaceVerdict:
    term = HalfspaceTerm(c, d)
    outcome = solve(ctx.assembly.program(term, name="halfspace"), tol)
    if not outcome.usable(tol.accept_inaccurate):
        return HalfspaceVerdict(
            term.c, term.d, False, status=outcome.status, diagnostics=outcome.diagnostics()
        )
    inflation = ctx.assembly.inflation(outcome.values, term)
    return HalfspaceVerdict(
        term.c, term.d, inflation <= _tolerance(term.d), term.d + inflation, inflation,
        outcome.status, outcome.diagnostics(),
    )


def verify_halfspace(
    net: Network,
    input_set,
    act: ActivationBlockSpec,
    c,
    d: float,
    bounds: Optional[BoundsState] = None,
    tol: ToleranceProfile = DEFAULT_TOLERANCES,
    context: Optional[AnalysisContext] = None,
) -> HalfspaceVerdict:
    """Feasibility of the LMI with S(c, d). 'unknown' never claims a violation."""
    ctx = context or prepare_analysis(net, input_set, act, bounds, tol=tol)
    return halfspace_verdict(ctx, c, d, tol)


def verify_polyhedron(
    net: Network,
    input_set,
    act: ActivationBlockSpec,
    rows: Sequence[Tuple],
    bounds: Optional[BoundsState] = None,
    tol: ToleranceProfile = DEFAULT_TOLERANCES,
    workers: int = 1,
    context: Optional[AnalysisContext] = None,
) -> Tuple[bool, List[HalfspaceVerdict]]:
    """Conjunction of halfspaces, one verification per row."""
    ctx = context or prepare_analysis(net, input_set, act, bounds, workers=workers, tol=tol)
    verdicts = _map(
        lambda row: halfspace_verdict(ctx, row[0], row[1], tol),
        rows,
        workers,
        "halfspaces",
        False,
    )
    return all(v.verified for v in verdicts), verdicts


@dataclass
class DisjunctionVerdict:
    rows: List[Tuple[np.ndarray, float]]
    verified: bool
    mode: str
    multipliers: Optional[np.ndarray] = None
    active: List[int] = field(default_factory=list)
    slack: Optional[float] = None
    status: str = ""
    row_verdicts: List[HalfspaceVerdict] = field(default_factory=list)

    @property
    def verdict(self) -> str:
        return "verified" if self.verified else "unknown"

    def to_record(self) -> dict:
        return {
            "rows": [{"c": c, "d": d} for c, d in self.rows],
            "verdict": self.verdict,
            "mode": self.mode,
            "multipliers": self.multipliers,
            "active": self.active,
            "slack": self.slack,
            "status": self.status,
            "row_verdicts": [v.to_record() for v in self.row_verdicts],
        }


def verify_disjunction(
    net: Network,
    input_set,
    act: ActivationBlockSpec,
    rows: Sequence[Tuple],
    mode: str = "joint",
    bounds: Optional[BoundsState] = None,
    tol: ToleranceProfile = DEFAULT_TOLERANCES,
    context: Optional[AnalysisContext] = None,
) -> DisjunctionVerdict:
    """
    Certify that at every input at least one row c_i^T y <= d_i holds.

    ``joint`` searches multipliers mu >= 0 with sum mu = 1 for the weighted
    inequality sum mu_i (c_i^T y - d_i) <= 0; ``separate`` tries each row on
    its own and succeeds if any single row verifies.
    """
    if not rows:
        raise PreconditionError("verify_disjunction needs at least one row")
    rows = [(np.asarray(c, dtype=float).ravel(), float(d)) for c, d in rows]
    ctx = context or prepare_analysis(net, input_set, act, bounds, tol=tol)
    if mode == "separate":
        verdicts = [halfspace_verdict(ctx, c, d, tol) for c, d in rows]
        active = [k for k, v in enumerate(verdicts) if v.verified]
        mult = np.zeros(len(rows))
        if active:
            mult[active[0]] = 1.0
        return DisjunctionVerdict(
            rows, bool(active), mode, mult, active, row_verdicts=verdicts
        )
    if mode == "joint":
        term = DisjunctionTerm(rows)
        outcome = solve(ctx.assembly.program(term, name="disjunction"), tol)
        if not outcome.usable(tol.accept_inaccurate):
            return DisjunctionVerdict(rows, False, mode, status=outcome.status)
        mu = np.maximum(outcome.value("mu"), 0.0)
        inflation = ctx.assembly.inflation(outcome.values, term)
        slack = inflation / max(float(mu.sum()), 1e-12)
        active = [int(k) for k in np.flatnonzero(mu > ACTIVE_MULTIPLIER)]
        return DisjunctionVerdict(
            rows, slack <= VERDICT_TOL, mode, mu, active, slack, outcome.status
        )
    raise PreconditionError(
        f"Unknown disjunction mode '{mode}'. Use 'joint' or 'separate'"
    )


def not_minimal_rows(n_y: int, index: int) -> List[Tuple[np.ndarray, float]]:
    """Rows y_j - y_index <= 0 for j != index: output ``index`` is not the unique minimum."""
    if not 0 <= index < n_y:
        raise PreconditionError(f"Output index {index} outside 0..{n_y - 1}")
    rows = []
    for j in range(n_y):
        if j != index:
            c = np.zeros(n_y)
            c[j], c[index] = 1.0, -1.0
            rows.append((c, 0.0))
    return rows
