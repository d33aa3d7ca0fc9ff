"""
Candidate quadratic forms from a sampled convex QP.

For one subdomain k the program is

    minimize    (rho/2)||c||^2 + lambda_loc*sum(xi_loc) + lambda_g*sum(xi_g) + lambda_ext*sum(eta)
    subject to  c^T phi(z) >= gamma_bar - xi_loc    for local samples z on S_k
                c^T phi(z) >= gamma_bar - xi_g      for global samples z on S_D
                c^T phi(z) <= -gamma_bar + eta      for exterior samples z of S_k
                xi_loc, xi_g, eta >= 0

so a candidate is positive on the graph and negative at the exterior points.
"""

import warnings
from dataclasses import asdict, dataclass, replace

import cvxpy as cp
import numpy as np

from quadcert.conic.program import ConeProgram
from quadcert.conic.solve import DEFAULT_TOLERANCES, ToleranceProfile, solve
from quadcert.exceptions import PreconditionError, SolverError
from quadcert.forms import ORIENTATIONS, QuadraticForm, features
from quadcert.relations.sampling import SampleSet

DEGENERATE_TOL = 1e-8
ZERO_SLACK_TOL = 1e-7
GLOBAL_SLACK_FACTOR = 10.0


@dataclass(frozen=True)
class CandidateSpec:
    """
    Weights of the candidate QP.

    Args:
        rho: regularization weight on ||c||^2
        lambda_loc: weight of local-sample slack
        lambda_g: weight of global-sample slack
        lambda_ext: weight of exterior-sample slack
        gamma_bar: margin required at every sample
        orientation: whether exterior points sit above ('upper') or below ('lower') the graph
    """

    rho: float = 1e-3
    lambda_loc: float = 10.0
    lambda_g: float = 1.0
    lambda_ext: float = 10.0
    gamma_bar: float = 1e-2
    orientation: str = "unconstrained"

    def __post_init__(self):
        for name in ("rho", "lambda_loc", "lambda_g", "lambda_ext", "gamma_bar"):
            value = getattr(self, name)
            if not (np.isfinite(value) and value > 0):
                raise PreconditionError(f"CandidateSpec.{name} must be strictly positive, got {value!r}")
        if self.orientation not in ORIENTATIONS:
            raise PreconditionError(f"Unknown orientation '{self.orientation}'")

    @classmethod
    def from_profile(cls, name: str, **overrides) -> "CandidateSpec":
        from quadcert.config import CANDIDATE_PROFILES

        if name not in CANDIDATE_PROFILES:
            raise PreconditionError(
                f"Unknown candidate profile '{name}'. Known: {sorted(CANDIDATE_PROFILES)}"
            )
        params = dict(CANDIDATE_PROFILES[name])
        params.update({k: v for k, v in overrides.items() if v is not None})
        return cls(**params)

    def scaled(self, factor: float) -> "CandidateSpec":
        """All four weights multiplied by ``factor`` (same argmin)."""
        return replace(
            self,
            rho=self.rho * factor,
            lambda_loc=self.lambda_loc * factor,
            lambda_g=self.lambda_g * factor,
            lambda_ext=self.lambda_ext * factor,
        )

    def with_orientation(self, orientation: str) -> "CandidateSpec":
        return replace(self, orientation=orientation)

    def to_record(self) -> dict:
        return asdict(self)


@dataclass
class SlackReport:
    """Slack magnitudes and solver diagnostics of one candidate QP."""

    tag: str
    status: str
    objective: float
    local_max: float
    local_sum: float
    global_max: float
    global_sum: float
    exterior_max: float
    exterior_sum: float
    row_violation: float
    degenerate: bool
    zero_slack: bool
    global_warning: bool = False

    def to_record(self) -> dict:
        return asdict(self)


def _identity(n):
    return np.eye(n)


def assemble_candidate_qp(samples: SampleSet, tag: str, spec: CandidateSpec) -> ConeProgram:
    """
    Build the candidate QP for subdomain ``tag``.

    Slack blocks are only created for nonempty sample classes; the
    variable count is 6 plus one slack per sample and every slack adds a
    nonnegativity row next to its sample row.

    Raises:
        PreconditionError: if there are no local samples for ``tag``
    """
    local = samples.local_for(tag)
    if len(local) == 0:
        raise PreconditionError(f"No local samples for subdomain '{tag}'")
    glob = samples.global_points
    ext = samples.exterior_for(tag)
    gamma = spec.gamma_bar

    prog = ConeProgram(f"candidate[{tag}]")
    c = prog.add_scalar_block("c", 6)
    objective = 0.5 * spec.rho * cp.sum_squares(c)

    classes = (
        ("xi_loc", local, spec.lambda_loc, ">="),
        ("xi_g", glob, spec.lambda_g, ">="),
        ("eta", ext, spec.lambda_ext, "<="),
    )
    for name, points, weight, sense in classes:
        n = len(points)
        if n == 0:
            continue
        slack = prog.add_scalar_block(name, n, cone="nonnegative")
        F = features(points)
        if sense == ">=":
            prog.add_rows(f"rows:{name}", [("c", F), (name, _identity(n))], np.full(n, gamma), ">=")
        else:
            prog.add_rows(f"rows:{name}", [("c", F), (name, -_identity(n))], np.full(n, -gamma), "<=")
        objective = objective + weight * cp.sum(slack)

    prog.minimize(objective)
    prog.meta.update(tag=tag, spec=spec, local=local, global_points=glob, exterior=ext)
    return prog


def _slack_stats(values):
    if values is None or len(values) == 0:
        return 0.0, 0.0
    values = np.maximum(values, 0.0)
    return float(values.max()), float(values.sum())


def _row_violation(c, prog: ConeProgram, slacks: dict) -> float:
    """Largest violation of the sample rows given the returned slacks."""
    gamma = prog.meta["spec"].gamma_bar
    worst = 0.0
    for key, name, sign in (("local", "xi_loc", 1), ("global_points", "xi_g", 1), ("exterior", "eta", -1)):
        points = prog.meta[key]
        if len(points) == 0:
            continue
        values = features(points) @ c
        s = slacks[name]
        if sign > 0:
            worst = max(worst, float(np.max(gamma - s - values)))
        else:
            worst = max(worst, float(np.max(values - (s - gamma))))
    return worst


def solve_candidate(
    qp: ConeProgram, tol: ToleranceProfile = DEFAULT_TOLERANCES, debug: bool = False
):
    """
    Solve a program from ``assemble_candidate_qp``.

    Inaccurate solves are accepted here. A global-sample slack above
    10 * gamma_bar only raises a warning; the candidate is still returned.

    Returns:
        (QuadraticForm, SlackReport)

    Raises:
        SolverError: if the solver returns no usable point
    """
    spec: CandidateSpec = qp.meta["spec"]
    tag = qp.meta["tag"]
    outcome = solve(qp, tol)
    if not outcome.usable(accept_inaccurate=True):
        raise SolverError(f"Candidate QP for '{tag}' did not converge", status=outcome.status)

    c = outcome.value("c")
    slacks = {name: outcome.values.get(name, np.zeros(0)) for name in ("xi_loc", "xi_g", "eta")}
    local_max, local_sum = _slack_stats(slacks["xi_loc"])
    global_max, global_sum = _slack_stats(slacks["xi_g"])
    ext_max, ext_sum = _slack_stats(slacks["eta"])

    report = SlackReport(
        tag=tag,
        status=outcome.status,
        objective=float(outcome.objective),
        local_max=local_max,
        local_sum=local_sum,
        global_max=global_max,
        global_sum=global_sum,
        exterior_max=ext_max,
        exterior_sum=ext_sum,
        row_violation=_row_violation(c, qp, slacks),
        degenerate=bool(np.max(np.abs(c)) < DEGENERATE_TOL),
        zero_slack=max(local_max, global_max, ext_max) <= ZERO_SLACK_TOL,
    )
    if global_max > GLOBAL_SLACK_FACTOR * spec.gamma_bar:
        report.global_warning = True
        warnings.warn(
            f"Candidate '{tag}': global-sample slack {global_max:.3e} exceeds "
            f"{GLOBAL_SLACK_FACTOR:g}*gamma_bar"
        )
    if debug:
        print(
            f"Candidate '{tag}': status {outcome.status}, objective {report.objective:.6e}, "
            f"slack max (loc/glob/ext) {local_max:.2e}/{global_max:.2e}/{ext_max:.2e}"
        )
        if report.degenerate:
            print(f"  Candidate '{tag}' is degenerate (||c||_inf < {DEGENERATE_TOL:g})")

    form = QuadraticForm(tuple(c), tag=tag, orientation=spec.orientation, provenance="candidate")
    return form, report
