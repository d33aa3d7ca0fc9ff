"""
Quadratic constraints used by the reachability SDP.

Neuron constraints are ``QuadraticForm`` objects in (phi, theta) coordinates:
the form's x is the preactivation and its y the postactivation. Input-set
constraints are symmetric matrices over [x; 1].
"""

from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence, Tuple, Union

import cvxpy as cp
import numpy as np

from quadcert.exceptions import PreconditionError
from quadcert.forms import QuadraticForm

BUILTIN_FAMILIES = ("relu_exact", "sector")


def relu_exact_qcs():
    """theta >= 0, theta - phi >= 0 and theta*(phi - theta) >= 0."""
    return [
        QuadraticForm((0, 0, 0, 0, 1, 0), tag="relu:nonneg", provenance="builtin"),
        QuadraticForm((0, 0, 0, -1, 1, 0), tag="relu:above", provenance="builtin"),
        QuadraticForm((0, -1, 1, 0, 0, 0), tag="relu:complementarity", provenance="builtin"),
    ]


def sector_qc() -> QuadraticForm:
    """theta*(phi - theta) >= 0: holds for relu, tanh and sat."""
    return QuadraticForm((0, -1, 1, 0, 0, 0), tag="sector", provenance="builtin")


def local_bound_qcs(pre, post):
    """(phi - lo)(hi - phi) >= 0 and (theta - lo)(hi - theta) >= 0."""
    (plo, phi_), (tlo, thi) = pre, post
    return [
        QuadraticForm((-1, 0, 0, plo + phi_, 0, -plo * phi_), tag="local:phi", provenance="builtin"),
        QuadraticForm((0, -1, 0, 0, tlo + thi, -tlo * thi), tag="local:theta", provenance="builtin"),
    ]


@dataclass(frozen=True)
class CertFamily:
    """
    Verified QC family attached to the neurons of one activation type.

    Args:
        name: label used in multiplier bookkeeping
        forms: constraints q(phi, theta) >= 0
        activation: activation tag the family is valid for
        domain: preactivation interval the forms were verified on, None if global
        layers: restrict to these hidden layers (1-based), None for all
    """

    name: str
    forms: Tuple[QuadraticForm, ...]
    activation: str
    domain: Optional[Tuple[float, float]] = None
    layers: Optional[Tuple[int, ...]] = None

    def __post_init__(self):
        object.__setattr__(self, "forms", tuple(self.forms))
        if not self.forms:
            raise PreconditionError(f"QC family '{self.name}' has no forms")

    def applies_to(self, layer: int, activation: str) -> bool:
        return activation == self.activation and (self.layers is None or layer in self.layers)

    def covers(self, pre) -> bool:
        if self.domain is None:
            return True
        return self.domain[0] <= pre[0] and pre[1] <= self.domain[1]

    def to_record(self) -> dict:
        return {
            "name": self.name,
            "activation": self.activation,
            "domain": None if self.domain is None else list(self.domain),
            "layers": None if self.layers is None else list(self.layers),
            "n_forms": len(self.forms),
        }


def builtin_family(name: str, activation: str = "relu") -> CertFamily:
    if name == "relu_exact":
        return CertFamily(name, tuple(relu_exact_qcs()), "relu")
    if name == "sector":
        return CertFamily(name, (sector_qc(),), activation)
    raise PreconditionError(
        f"Unknown built-in QC family '{name}'. Use one of {BUILTIN_FAMILIES}"
    )


def family_from_file(path: Union[str, Path], activation: str, name: Optional[str] = None,
                     layers: Optional[Sequence[int]] = None) -> CertFamily:
    """Verified forms of a verified-family file; the domain comes from its header."""
    from quadcert.candidates.io import read_family
    from quadcert.verification.io import load_verified_forms

    forms = load_verified_forms(path)
    header = read_family(path).header
    domain = header.get("domain")
    return CertFamily(
        name or Path(path).stem,
        tuple(forms),
        activation,
        domain=None if domain is None else (float(domain[0]), float(domain[1])),
        layers=None if layers is None else tuple(layers),
    )


@dataclass(frozen=True, eq=False)
class InputSetQC:
    """
    Input set {x : [x; 1]^T P_i [x; 1] >= 0 for all i}.

    ``box`` is a bounding box of the set; it is required for the soundness
    inflation of facet bounds.
    """

    P: Tuple[np.ndarray, ...]
    box: Optional[np.ndarray] = None
    labels: Tuple[str, ...] = field(default=())

    @property
    def n_x(self) -> int:
        return self.P[0].shape[0] - 1

    @classmethod
    def from_box(cls, box) -> "InputSetQC":
        """One constraint (x_i - lo_i)(hi_i - x_i) >= 0 per coordinate."""
        box = np.asarray(box, dtype=float).reshape(-1, 2)
        if np.any(box[:, 0] > box[:, 1]):
            raise PreconditionError("Input box has lo > hi")
        n = box.shape[0]
        mats = []
        for i, (lo, hi) in enumerate(box):
            P = np.zeros((n + 1, n + 1))
            P[i, i] = -1.0
            P[i, n] = P[n, i] = 0.5 * (lo + hi)
            P[n, n] = -lo * hi
            mats.append(P)
        return cls(tuple(mats), box=box, labels=tuple(f"box[{i}]" for i in range(n)))

    def evaluate(self, x) -> np.ndarray:
        """(n, N_x) constraint values at a batch of inputs."""
        x = np.atleast_2d(np.asarray(x, dtype=float))
        z = np.column_stack([x, np.ones(x.shape[0])])
        return np.stack([np.einsum("ni,ij,nj->n", z, P, z) for P in self.P], axis=1)


def block_transform(s: int) -> np.ndarray:
    """T = [[-I, I], [0, I]], mapping (phi, theta) to (theta - phi, theta)."""
    I, Z = np.eye(s), np.zeros((s, s))
    return np.block([[-I, I], [Z, I]])


def repeated_block_matrix(q1, Q2, N2=None):
    """
    M_rep = [[0, Q1], [Q1, -2 Q1]] + T^T Q2 T over z = (phi_block, theta_block).

    ``q1`` is the diagonal of Q1. Works on numpy arrays or cvxpy expressions;
    with cvxpy it also returns the side constraint Q2 - N2 >> 0 (N2 is an
    elementwise-nonnegative block created by the caller).

    Returns:
        (M_rep, constraints)
    """
    s = Q2.shape[0] // 2
    T = block_transform(s)
    if isinstance(q1, cp.Expression) or isinstance(Q2, cp.Expression):
        Q1 = cp.diag(q1)
        zero = np.zeros((s, s))
        M1 = cp.bmat([[zero, Q1], [Q1, -2 * Q1]])
        M = M1 + cp.Constant(T.T) @ Q2 @ cp.Constant(T)
        constraints = [] if N2 is None else [Q2 - N2 >> 0]
        return M, constraints
    Q1 = np.diag(np.asarray(q1, dtype=float))
    M1 = np.block([[np.zeros((s, s)), Q1], [Q1, -2 * Q1]])
    return M1 + T.T @ np.asarray(Q2, dtype=float) @ T, []
