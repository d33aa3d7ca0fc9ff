"""
SOS verification of quadratic forms over semialgebraic pieces.

For a piece {z : g_j(z) >= 0} a form q is verified by multipliers
sigma_j in SOS with q - sum_j sigma_j g_j in SOS. Each piece problem is solved
after the change of variables x = centre + half_width*u that maps the piece
interval to [-1, 1]; the certificate keeps the transform so the re-check can
undo it.
"""

import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import cvxpy as cp
import numpy as np

from quadcert.conic.program import ConeProgram
from quadcert.conic.solve import DEFAULT_TOLERANCES, ToleranceProfile, solve
from quadcert.exceptions import PreconditionError
from quadcert.forms import QuadraticForm
from quadcert.relations.polynomial import Polynomial2
from quadcert.relations.relation import SemialgebraicPiece
from quadcert.utils.serialization import digest
from quadcert.verification.gram import (
    coefficient_vector,
    exponent_index,
    gram_map,
    gram_to_polynomial,
    monomial_basis,
)
from quadcert.verification.recheck import RecheckResult, recheck_certificate, recheck_identity

POLICY_KINDS = ("offset", "truncation")


@dataclass(frozen=True)
class SOSCertificate:
    """
    Gram data proving target - sum_j sigma_j g_j is SOS in the variables (u, y).

    ``constraints`` and ``target`` are the transformed (and for constraints,
    rescaled by ``constraint_scales``) polynomials the solver saw.
    """

    piece_label: str
    transform: Tuple[float, float]
    constraint_scales: Tuple[float, ...]
    multipliers: Tuple[Tuple[Tuple[Tuple[int, int], ...], np.ndarray], ...]
    residual_basis: Tuple[Tuple[int, int], ...]
    residual_gram: np.ndarray
    half_degrees: Tuple[int, ...]
    residual_half_degree: int
    identity_slack: float
    min_eigenvalue: float
    constraints: Tuple[Polynomial2, ...] = ()
    target: Optional[Polynomial2] = None

    def to_record(self) -> dict:
        return {
            "piece": self.piece_label,
            "transform": list(self.transform),
            "constraint_scales": list(self.constraint_scales),
            "half_degrees": list(self.half_degrees),
            "residual_half_degree": self.residual_half_degree,
            "multipliers": [
                {"basis": [list(e) for e in basis], "gram": np.asarray(G).tolist()}
                for basis, G in self.multipliers
            ],
            "residual": {
                "basis": [list(e) for e in self.residual_basis],
                "gram": np.asarray(self.residual_gram).tolist(),
            },
            "identity_slack": self.identity_slack,
            "min_eigenvalue": self.min_eigenvalue,
            "constraints": [g.to_records() for g in self.constraints],
            "target": self.target.to_records() if self.target is not None else [],
        }

    @classmethod
    def from_record(cls, record: dict) -> "SOSCertificate":
        def basis_of(rows):
            return tuple(tuple(int(v) for v in e) for e in rows)

        return cls(
            piece_label=record["piece"],
            transform=tuple(record["transform"]),
            constraint_scales=tuple(record["constraint_scales"]),
            multipliers=tuple(
                (basis_of(m["basis"]), np.array(m["gram"], dtype=float)) for m in record["multipliers"]
            ),
            residual_basis=basis_of(record["residual"]["basis"]),
            residual_gram=np.array(record["residual"]["gram"], dtype=float),
            half_degrees=tuple(record["half_degrees"]),
            residual_half_degree=int(record["residual_half_degree"]),
            identity_slack=float(record["identity_slack"]),
            min_eigenvalue=float(record["min_eigenvalue"]),
            constraints=tuple(Polynomial2.from_records(g) for g in record.get("constraints", [])),
            target=Polynomial2.from_records(record.get("target", [])),
        )

    def digest(self) -> str:
        return digest(self.to_record())


@dataclass
class SOSOutcome:
    """Result of one SOS solve; ``ok`` only when the solve and the re-check both passed."""

    ok: bool
    status: str
    certificate: Optional[SOSCertificate] = None
    half_degrees: Tuple[int, ...] = ()
    piece_label: str = ""
    recheck: Optional[RecheckResult] = None
    message: str = ""

    def to_record(self) -> dict:
        return {
            "ok": self.ok,
            "status": self.status,
            "piece": self.piece_label,
            "half_degrees": list(self.half_degrees),
            "certificate_digest": self.certificate.digest() if self.certificate else None,
            "recheck": self.recheck.to_record() if self.recheck else None,
            "message": self.message,
        }


@dataclass(frozen=True)
class DegreePolicy:
    """
    Multiplier half-degrees and escalation.

    'offset': d_j = max(0, ceil((2 - deg g_j)/2)) + 1 + step.
    'truncation': common even degree 2D = 2*ceil(max deg / 2) + 2*step and
    d_j = floor((2D - deg g_j)/2).
    """

    kind: str = "offset"
    escalations: int = 1

    def __post_init__(self):
        if self.kind not in POLICY_KINDS:
            raise PreconditionError(f"Unknown degree policy '{self.kind}'. Use one of {POLICY_KINDS}")
        if self.escalations < 0:
            raise PreconditionError("Degree escalations must be non-negative")

    def half_degrees(
        self, q_degree: int, constraints: Sequence[Polynomial2], step: int = 0
    ) -> Tuple[int, ...]:
        if self.kind == "offset":
            return tuple(max(0, math.ceil((2 - g.degree) / 2)) + 1 + step for g in constraints)
        top = max([q_degree, *(g.degree for g in constraints)])
        two_d = 2 * math.ceil(top / 2) + 2 * step
        return tuple(max(0, (two_d - g.degree) // 2) for g in constraints)

    @property
    def steps(self) -> range:
        return range(self.escalations + 1)

    @classmethod
    def from_record(cls, record: Optional[dict]) -> "DegreePolicy":
        record = record or {}
        return cls(kind=record.get("kind", "offset"), escalations=int(record.get("escalations", 1)))

    def to_record(self) -> dict:
        return {"kind": self.kind, "escalations": self.escalations}


def residual_half_degree(target_degree: int, constraints: Sequence[Polynomial2], half_degrees) -> int:
    top = max([target_degree, 0, *(2 * d + g.degree for g, d in zip(constraints, half_degrees))])
    return math.ceil(top / 2)


def piece_transform(piece: SemialgebraicPiece) -> Tuple[float, float]:
    """(centre, half_width) mapping the piece interval to [-1, 1]; identity without an interval."""
    if piece.interval is None:
        return 0.0, 1.0
    a, b = piece.interval
    if b == a:
        return a, 1.0
    return 0.5 * (a + b), 0.5 * (b - a)


def _vec(G, n):
    return cp.reshape(G, (n * n,), order="F")


def _solve_identity(target, constraints, half_degrees, d0, tol):
    """Assemble and solve target = sum_j sigma_j g_j + sigma_0. Returns (outcome, bases)."""
    index = exponent_index(2 * d0)
    prog = ConeProgram("sos")
    bases, lhs = [], 0
    for j, (g, d) in enumerate(zip(constraints, half_degrees)):
        basis = monomial_basis(d)
        G = prog.add_matrix_block(f"sigma{j}", len(basis), "psd")
        lhs = lhs + cp.Constant(gram_map(basis, g, index)) @ _vec(G, len(basis))
        bases.append(basis)
    basis0 = monomial_basis(d0)
    G0 = prog.add_matrix_block("sigma_res", len(basis0), "psd")
    lhs = lhs + cp.Constant(gram_map(basis0, Polynomial2.constant(1.0), index)) @ _vec(G0, len(basis0))
    prog.add_constraint("identity", lhs == coefficient_vector(target, index))
    return solve(prog, tol), bases, basis0


def _certify(target, constraints, half_degrees, label, transform, scales, tol):
    """Solve one SOS identity in transformed coordinates and wrap the certificate."""
    d0 = residual_half_degree(target.degree, constraints, half_degrees)
    outcome, bases, basis0 = _solve_identity(target, constraints, half_degrees, d0, tol)
    if not outcome.ok:
        return SOSOutcome(False, outcome.status, half_degrees=tuple(half_degrees), piece_label=label,
                          message=outcome.message)

    grams = [outcome.value(f"sigma{j}") for j in range(len(constraints))]
    G0 = outcome.value("sigma_res")
    residual = target - gram_to_polynomial(G0, basis0)
    for G, basis, g in zip(grams, bases, constraints):
        residual = residual - gram_to_polynomial(G, basis) * g
    eigs = [np.linalg.eigvalsh(0.5 * (G + G.T))[0] for G in [*grams, G0]]

    cert = SOSCertificate(
        piece_label=label,
        transform=tuple(float(v) for v in transform),
        constraint_scales=tuple(float(s) for s in scales),
        multipliers=tuple((tuple(b), G) for b, G in zip(bases, grams)),
        residual_basis=tuple(basis0),
        residual_gram=G0,
        half_degrees=tuple(half_degrees),
        residual_half_degree=d0,
        identity_slack=float(residual.max_abs_coefficient()),
        min_eigenvalue=float(min(eigs)),
        constraints=tuple(constraints),
        target=target,
    )
    return SOSOutcome(
        True,
        outcome.status,
        certificate=cert,
        half_degrees=tuple(half_degrees),
        piece_label=label,
    )


def sos_membership(p: Polynomial2, half_degree: int, tol: ToleranceProfile = DEFAULT_TOLERANCES,
                   recheck: bool = True) -> SOSOutcome:
    """
    Decide p in SOS over the full monomial basis up to ``half_degree``.

    Odd-degree polynomials are reported infeasible without a solve.

    Raises:
        PreconditionError: if deg(p) > 2 * half_degree
    """
    if p.degree > 2 * half_degree:
        raise PreconditionError(f"deg(p) = {p.degree} exceeds 2*{half_degree}")
    if p.degree % 2 == 1:
        return SOSOutcome(False, "infeasible", half_degrees=(), piece_label="sos", message="odd degree")
    result = _certify(p, [], [], "sos", (0.0, 1.0), (), tol)
    if result.ok and recheck:
        result.recheck = recheck_identity(result.certificate, p, [])
        result.ok = result.recheck.passed
    return result


def verify_on_piece(
    q: QuadraticForm,
    piece: SemialgebraicPiece,
    mult_half_degrees: Sequence[int],
    tol: ToleranceProfile = DEFAULT_TOLERANCES,
    recheck: bool = True,
) -> SOSOutcome:
    """
    Search sigma_j of half-degree d_j with q - sum_j sigma_j g_j in SOS.

    Raises:
        PreconditionError: if the degree list does not match the constraints
            or contains a negative entry
    """
    half_degrees = tuple(int(d) for d in mult_half_degrees)
    if len(half_degrees) != len(piece.constraints):
        raise PreconditionError(
            f"{len(half_degrees)} half-degrees for {len(piece.constraints)} constraints of '{piece.label}'"
        )
    if any(d < 0 for d in half_degrees):
        raise PreconditionError("Multiplier half-degrees must be non-negative")

    centre, half_width = piece_transform(piece)
    target = q.to_polynomial().affine_x(centre, half_width)
    constraints, scales = [], []
    for g in piece.constraints:
        g_u = g.affine_x(centre, half_width)
        peak = float(g_u.max_abs_coefficient())
        scale = 1.0 / peak if peak > 0 else 1.0
        constraints.append(g_u * scale)
        scales.append(scale)

    result = _certify(target, constraints, half_degrees, piece.label, (centre, half_width), scales, tol)
    if result.ok and recheck:
        result.recheck = recheck_certificate(result.certificate, q, piece)
        result.ok = result.recheck.passed
        if not result.ok:
            result.message = "certificate failed the extended-precision re-check"
    return result


def verify_with_policy(q: QuadraticForm, piece: SemialgebraicPiece, policy: DegreePolicy,
                       tol: ToleranceProfile = DEFAULT_TOLERANCES, debug: bool = False) -> SOSOutcome:
    """verify_on_piece with escalating half-degrees until success or the policy runs out."""
    tried = []
    result = None
    q_degree = max(q.to_polynomial().degree, 0)
    for step in policy.steps:
        degrees = policy.half_degrees(q_degree, piece.constraints, step)
        result = verify_on_piece(q, piece, degrees, tol)
        tried.append(list(degrees))
        if debug:
            state = "ok" if result.ok else result.status
            print(f"    piece '{piece.label}' degrees {list(degrees)}: {state}")
        if result.ok:
            break
    if not result.ok:
        result.message = (result.message + "; " if result.message else "") + f"tried half-degrees {tried}"
    return result


@dataclass
class UnionVerdict:
    verified: bool
    outcomes: List[SOSOutcome] = field(default_factory=list)

    @property
    def failing_pieces(self) -> List[str]:
        return [o.piece_label for o in self.outcomes if not o.ok]

    @property
    def certificates(self) -> List[SOSCertificate]:
        return [o.certificate for o in self.outcomes if o.ok]


def verify_union(
    q: QuadraticForm,
    pieces: Sequence[SemialgebraicPiece],
    policy: DegreePolicy = DegreePolicy(),
    tol: ToleranceProfile = DEFAULT_TOLERANCES,
    debug: bool = False,
) -> UnionVerdict:
    """
    Verified iff every piece verifies. All pieces are attempted so a failure
    report names every failing piece.
    """
    if not pieces:
        raise PreconditionError("verify_union needs at least one piece")
    outcomes = [verify_with_policy(q, piece, policy, tol, debug=debug) for piece in pieces]
    return UnionVerdict(all(o.ok for o in outcomes), outcomes)


@dataclass
class FamilyVerdict:
    form: QuadraticForm
    verified: bool
    union: Optional[UnionVerdict] = None
    message: str = ""

    @property
    def failing_pieces(self) -> List[str]:
        return self.union.failing_pieces if self.union is not None else []


def verify_family(
    forms: Sequence[QuadraticForm],
    pieces: Sequence[SemialgebraicPiece],
    policy: DegreePolicy = DegreePolicy(),
    tol: ToleranceProfile = DEFAULT_TOLERANCES,
    workers: int = 1,
    analytic: Sequence[QuadraticForm] = (),
    debug: bool = False,
) -> List[FamilyVerdict]:
    """
    Verify every candidate over ``pieces``; analytic forms are attached as
    verified without a solve.

    Failing candidates stay in the returned list with ``verified=False``
    and a diagnostic; callers drop them from the verified family.
    """
    def run(q):
        if debug:
            print(f"Verifying candidate '{q.tag}' on {len(pieces)} pieces")
        return verify_union(q, pieces, policy, tol, debug=debug)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            unions = list(pool.map(run, forms))
    else:
        unions = [run(q) for q in forms]

    verdicts = []
    for q, union in zip(forms, unions):
        message = ""
        if not union.verified:
            message = f"dropped: fails on pieces {union.failing_pieces}"
            warnings.warn(f"Candidate '{q.tag}' {message}")
            if debug:
                print(f"Candidate '{q.tag}' {message}")
        verdicts.append(FamilyVerdict(q, union.verified, union, message))
    for q in analytic:
        verdicts.append(FamilyVerdict(q.replace(provenance="analytic"), True, None, "analytic"))
    return verdicts
