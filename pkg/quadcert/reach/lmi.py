"""
S-procedure LMI for networks.

For the lifted vector xi the program asks for

    M_x + M_sigma + E_y^T S E_y  <<  0

where M_x combines the input-set constraints with multipliers tau >= 0 and
M_sigma collects every activation constraint source enabled in an
``ActivationBlockSpec``. Every constraint contributes xi^T M_k xi >= 0 along
network trajectories, so feasibility gives xi^T E_y^T S E_y xi <= 0 there.

Scalar multipliers are stacked: column k of the sparse matrix ``B`` holds
vec(M_k) in column-major order and the weighted sum is reshape(B @ lambda).
"""

import warnings
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

import cvxpy as cp
import numpy as np
import scipy.sparse as sp

from quadcert.conic import ConeProgram
from quadcert.exceptions import PreconditionError
from quadcert.network.blocks import BlockPartition, group_blocks
from quadcert.network.bounds import BoundsState, interval_propagate
from quadcert.network.model import Network
from quadcert.reach.lifted import LiftedBasis
from quadcert.reach.qcs import (
    CertFamily,
    InputSetQC,
    local_bound_qcs,
    relu_exact_qcs,
    repeated_block_matrix,
)

RELU_COMPLEMENTARITY = ("inequality", "free")
BOUNDS_SOURCES = ("ibp", "tightened")


@dataclass(frozen=True)
class ActivationBlockSpec:
    """
    Which activation constraints enter M_sigma.

    Args:
        name: label used in reports ('EP', 'COMB', ...)
        families: verified QC families, applied per activation tag
        relu_exact: the three exact scalar ReLU constraints on unstable neurons
        block_size: s_max for repeated-ReLU blocks, None to disable
        block_strategy: 'sequential' or 'cosine'
        partition: explicit block partition, overrides block_size grouping
        local_bounds: quadratic box constraints from per-neuron bounds
        relu_complementarity: 'inequality' (multiplier >= 0) or 'free'
        bounds_source: 'ibp' or 'tightened' local bounds
    """

    name: str = "custom"
    families: Tuple[CertFamily, ...] = ()
    relu_exact: bool = False
    block_size: Optional[int] = None
    block_strategy: str = "sequential"
    partition: Optional[BlockPartition] = None
    local_bounds: bool = False
    relu_complementarity: str = "inequality"
    bounds_source: str = "ibp"

    def __post_init__(self):
        object.__setattr__(self, "families", tuple(self.families))
        if not (self.families or self.relu_exact or self.use_block_repeated or self.local_bounds):
            raise PreconditionError("ActivationBlockSpec needs at least one constraint source")
        if self.relu_complementarity not in RELU_COMPLEMENTARITY:
            raise PreconditionError(f"relu_complementarity must be one of {RELU_COMPLEMENTARITY}")
        if self.bounds_source not in BOUNDS_SOURCES:
            raise PreconditionError(f"bounds_source must be one of {BOUNDS_SOURCES}")
        if self.block_size is not None and self.block_size < 1:
            raise PreconditionError("block_size must be at least 1")

    @property
    def use_block_repeated(self) -> bool:
        return self.block_size is not None or self.partition is not None

    def to_record(self) -> dict:
        return {
            "name": self.name,
            "families": [f.to_record() for f in self.families],
            "relu_exact": self.relu_exact,
            "block_size": self.block_size,
            "block_strategy": self.block_strategy,
            "local_bounds": self.local_bounds,
            "relu_complementarity": self.relu_complementarity,
            "bounds_source": self.bounds_source,
        }


@dataclass(frozen=True)
class TermInfo:
    source: str
    layer: int
    neuron: int
    tag: str


def _vec_columns(mats: Sequence[sp.spmatrix], N: int) -> sp.csc_matrix:
    """Sparse (N*N, K) matrix whose column k is vec(mats[k]) in column-major order."""
    rows, cols, data = [], [], []
    for k, M in enumerate(mats):
        M = sp.coo_matrix(M)
        rows.append(M.col * N + M.row)
        cols.append(np.full(M.nnz, k))
        data.append(M.data)
    if not mats:
        return sp.csc_matrix((N * N, 0))
    return sp.csc_matrix(
        (np.concatenate(data), (np.concatenate(rows), np.concatenate(cols))), shape=(N * N, len(mats))
    )


def _project_psd(A: np.ndarray) -> np.ndarray:
    w, V = np.linalg.eigh(0.5 * (A + A.T))
    return (V * np.maximum(w, 0.0)) @ V.T


class LMIAssembly:
    """
    Constant data of the LMI for one network, input set and activation spec.

    The structure is shared read-only between facet solves; ``program``
    builds a fresh cone program for a given output term.
    """

    def __init__(self, net: Network, basis: LiftedBasis, input_set: InputSetQC, act: ActivationBlockSpec,
                 bounds: BoundsState, partition: Optional[BlockPartition]):
        self.net = net
        self.basis = basis
        self.input_set = input_set
        self.act = act
        self.bounds = bounds
        self.partition = partition
        self.terms: List[TermInfo] = []
        self.free_terms: List[TermInfo] = []
        self.skipped: List[TermInfo] = []

        N = basis.dim
        E_x = sp.csr_matrix(basis.E_x)
        self.B_input = _vec_columns([E_x.T @ sp.csr_matrix(P) @ E_x for P in input_set.P], N)

        nonneg, free = [], []
        for layer in range(1, net.depth + 1):
            tag = net.activations[layer - 1]
            nonlinear = net.nonlinear_mask(layer)
            for i in range(net.hidden_sizes[layer - 1]):
                E = basis.E_neuron(layer, i)

                def add(form, source, target=nonneg, infos=self.terms):
                    target.append(E.T @ sp.csr_matrix(form.matrix) @ E)
                    infos.append(TermInfo(source, layer, i, form.tag))

                if nonlinear[i]:
                    for family in act.families:
                        if not family.applies_to(layer, tag):
                            continue
                        if not family.covers(bounds.pre[layer - 1][i]):
                            self.skipped.append(TermInfo(f"cert:{family.name}", layer, i, "outside domain"))
                            continue
                        for form in family.forms:
                            add(form, f"cert:{family.name}")
                    if act.relu_exact and tag == "relu":
                        for form in relu_exact_qcs():
                            if form.tag == "relu:complementarity" and act.relu_complementarity == "free":
                                add(form, "relu_exact", free, self.free_terms)
                            else:
                                add(form, "relu_exact")
                if act.local_bounds:
                    phi_qc, theta_qc = local_bound_qcs(bounds.pre[layer - 1][i], bounds.post[layer - 1][i])
                    add(phi_qc, "local")
                    if nonlinear[i]:
                        add(theta_qc, "local")

        if self.skipped:
            warnings.warn(
                f"{len(self.skipped)} neuron(s) have preactivation bounds outside a QC family domain; "
                "the family is not applied to them"
            )
        self.B = _vec_columns(nonneg, N)
        self.B_free = _vec_columns(free, N)
        self.block_maps = []
        if partition is not None:
            for refs in partition:
                if any(net.activations[l - 1] != "relu" or (l, i) not in basis.positions for l, i in refs):
                    raise PreconditionError(f"Block {refs} contains neurons that are not nonlinear ReLUs")
                self.block_maps.append((refs, basis.E_block(refs)))
        self.R2 = basis.norm_bound(bounds)

    @property
    def dim(self) -> int:
        return self.basis.dim

    def multiplier_counts(self) -> Dict[str, int]:
        counts: Dict[str, int] = {"input": self.B_input.shape[1]}
        for info in self.terms + self.free_terms:
            counts[info.source] = counts.get(info.source, 0) + 1
        if self.block_maps:
            s = [len(refs) for refs, _ in self.block_maps]
            counts["repeated:q1"] = sum(s)
            counts["repeated:Q2"] = sum((2 * k) * (2 * k + 1) // 2 for k in s)
            counts["repeated:N2"] = counts["repeated:Q2"]
        return counts

    def program(self, output_term, name: str = "lmi") -> ConeProgram:
        N = self.dim
        prog = ConeProgram(name)
        tau = prog.add_scalar_block("tau", self.B_input.shape[1], "nonnegative")
        vec = cp.Constant(self.B_input) @ tau
        if self.B.shape[1]:
            lam = prog.add_scalar_block("lambda", self.B.shape[1], "nonnegative")
            vec = vec + cp.Constant(self.B) @ lam
        if self.B_free.shape[1]:
            nu = prog.add_scalar_block("lambda_free", self.B_free.shape[1], "free")
            vec = vec + cp.Constant(self.B_free) @ nu
        M = cp.reshape(vec, (N, N), order="F")
        for k, (refs, F) in enumerate(self.block_maps):
            s = len(refs)
            q1 = prog.add_scalar_block(f"q1_{k}", s, "nonnegative")
            Q2 = prog.add_matrix_block(f"Q2_{k}", 2 * s, "free")
            N2 = prog.add_matrix_block(f"N2_{k}", 2 * s, "elementwise_nonnegative")
            M_rep, _ = repeated_block_matrix(q1, Q2)
            prog.add_lmi(f"copositive_{k}", Q2 - N2, ">>")
            M = M + cp.Constant(F.T) @ M_rep @ cp.Constant(F)
        M = M + output_term.expression(prog, self.basis)
        prog.add_lmi("s_procedure", M, "<<")
        return prog

    def numeric_matrix(self, values: Dict[str, np.ndarray], output_term) -> np.ndarray:
        """
        M at a solver point with every multiplier projected onto its cone, so
        that the result is a valid certificate matrix up to its top eigenvalue.
        """
        N = self.dim
        vec = self.B_input @ np.maximum(values["tau"], 0.0)
        if self.B.shape[1]:
            vec = vec + self.B @ np.maximum(values["lambda"], 0.0)
        if self.B_free.shape[1]:
            vec = vec + self.B_free @ values["lambda_free"]
        M = np.asarray(vec).reshape((N, N), order="F")
        for k, (refs, F) in enumerate(self.block_maps):
            q1 = np.maximum(values[f"q1_{k}"], 0.0)
            N2 = np.maximum(values[f"N2_{k}"], 0.0)
            N2 = 0.5 * (N2 + N2.T)
            Q2 = N2 + _project_psd(values[f"Q2_{k}"] - N2)
            M_rep, _ = repeated_block_matrix(q1, Q2)
            M = M + F.T @ M_rep @ F
        M = M + output_term.numeric(values, self.basis)
        return 0.5 * (M + M.T)

    def inflation(self, values: Dict[str, np.ndarray], output_term) -> float:
        """max(0, lambda_max(M)) * R^2 / 2."""
        top = float(np.linalg.eigvalsh(self.numeric_matrix(values, output_term))[-1])
        return max(0.0, top) * self.R2 / 2.0


def s_matrix(c, d) -> np.ndarray:
    """S(c, d) = [[0, c], [c^T, -2d]], so [y; 1]^T S [y; 1] = 2(c^T y - d)."""
    c = np.asarray(c, dtype=float).ravel()
    n = c.shape[0]
    S = np.zeros((n + 1, n + 1))
    S[:n, n] = S[n, :n] = c
    S[n, n] = -2.0 * d
    return S


class FacetTerm:
    """E_y^T S(a, b) E_y with the offset b as a free variable to minimize."""

    def __init__(self, a):
        self.a = np.asarray(a, dtype=float).ravel()
        if not np.linalg.norm(self.a) > 0:
            raise PreconditionError("Facet direction must be nonzero")

    def _const(self, basis):
        E_y = basis.E_y
        return E_y.T @ s_matrix(self.a, 0.0) @ E_y

    def _unit(self, basis):
        U = np.zeros((basis.dim, basis.dim))
        U[basis.const, basis.const] = -2.0
        return U

    def expression(self, prog: ConeProgram, basis: LiftedBasis):
        b = prog.add_scalar_block("b", 1, "free")
        prog.minimize(b[0])
        return cp.Constant(self._const(basis)) + cp.Constant(self._unit(basis)) * b[0]

    def numeric(self, values, basis):
        return self._const(basis) + self._unit(basis) * float(values["b"][0])


class HalfspaceTerm:
    """Fixed E_y^T S(c, d) E_y; the program is a feasibility problem."""

    def __init__(self, c, d: float):
        self.c = np.asarray(c, dtype=float).ravel()
        self.d = float(d)

    def expression(self, prog: ConeProgram, basis: LiftedBasis):
        return cp.Constant(basis.E_y.T @ s_matrix(self.c, self.d) @ basis.E_y)

    def numeric(self, values, basis):
        return basis.E_y.T @ s_matrix(self.c, self.d) @ basis.E_y


class DisjunctionTerm:
    """
    sum_i mu_i E_y^T S(c_i, d_i) E_y with mu >= 0 and sum mu = 1.

    Feasibility gives sum_i mu_i (c_i^T y - d_i) <= 0 on the input set, so at
    every input at least one row holds.
    """

    def __init__(self, rows: Sequence[Tuple[np.ndarray, float]]):
        if not rows:
            raise PreconditionError("Disjunction needs at least one row")
        self.rows = [(np.asarray(c, dtype=float).ravel(), float(d)) for c, d in rows]

    def _mats(self, basis):
        return [basis.E_y.T @ s_matrix(c, d) @ basis.E_y for c, d in self.rows]

    def expression(self, prog: ConeProgram, basis: LiftedBasis):
        m = len(self.rows)
        mu = prog.add_scalar_block("mu", m, "nonnegative")
        prog.add_rows("mu:normalization", [("mu", np.ones((1, m)))], [1.0], "==")
        B = _vec_columns([sp.csr_matrix(M) for M in self._mats(basis)], basis.dim)
        return cp.reshape(cp.Constant(B) @ mu, (basis.dim, basis.dim), order="F")

    def numeric(self, values, basis):
        mu = np.maximum(values["mu"], 0.0)
        return sum(w * M for w, M in zip(mu, self._mats(basis)))


def assemble_lmi(
    net: Network,
    lifted: Optional[LiftedBasis],
    input_set: InputSetQC,
    act: ActivationBlockSpec,
    bounds: Optional[BoundsState] = None,
) -> LMIAssembly:
    """
    Constant LMI data for ``net``.

    Pruning is expected to have been applied already. Bounds are needed for
    local-bound constraints; otherwise they are propagated from the input
    box for the soundness inflation.

    Raises:
        PreconditionError: local bounds requested without bounds, or no box
    """
    if input_set.n_x != net.n_x:
        raise PreconditionError(f"Input set has dimension {input_set.n_x}, network expects {net.n_x}")
    if bounds is None:
        if act.local_bounds:
            raise PreconditionError("Local-bound constraints need per-neuron bounds")
        if input_set.box is None:
            raise PreconditionError("Input set needs a bounding box")
        bounds = interval_propagate(net, input_set.box)
    lifted = lifted or LiftedBasis(net)
    partition = act.partition
    if partition is None and act.block_size is not None:
        partition = group_blocks(net, bounds, act.block_size, act.block_strategy)
    return LMIAssembly(net, lifted, input_set, act, bounds, partition)
