"""
Solver boundary: runs a ConeProgram through cvxpy and maps the result.
"""

import time
from dataclasses import dataclass, replace
from typing import Any, Dict, Optional

import cvxpy as cp
import numpy as np

from quadcert.conic.program import ConeProgram

STATUSES = ("optimal", "infeasible", "unbounded", "inaccurate", "error")

_STATUS_MAP = {
    cp.OPTIMAL: "optimal",
    cp.OPTIMAL_INACCURATE: "inaccurate",
    cp.INFEASIBLE: "infeasible",
    cp.INFEASIBLE_INACCURATE: "infeasible",
    cp.UNBOUNDED: "unbounded",
    cp.UNBOUNDED_INACCURATE: "unbounded",
    cp.USER_LIMIT: "inaccurate",
    cp.SOLVER_ERROR: "error",
}

FALLBACK_SOLVERS = ("CLARABEL", "SCS")


@dataclass(frozen=True)
class ToleranceProfile:
    """
    Solver tolerances.

    Args:
        feasibility: primal/dual feasibility tolerance
        gap: absolute and relative duality gap tolerance
        solver: cvxpy solver name
        accept_inaccurate: whether callers may use 'inaccurate' outcomes
        max_iter: iteration cap passed to the solver
    """

    feasibility: float = 1e-8
    gap: float = 1e-8
    solver: str = "CLARABEL"
    accept_inaccurate: bool = False
    max_iter: int = 500

    def tightened(self, factor: float = 100.0) -> "ToleranceProfile":
        return replace(self, feasibility=self.feasibility / factor, gap=self.gap / factor,
                       max_iter=2 * self.max_iter)

    def with_overrides(self, **overrides) -> "ToleranceProfile":
        return replace(self, **{k: v for k, v in overrides.items() if v is not None})

    def solver_options(self, solver: str) -> Dict[str, Any]:
        if solver == "CLARABEL":
            return dict(tol_feas=self.feasibility, tol_gap_abs=self.gap, tol_gap_rel=self.gap,
                        max_iter=self.max_iter)
        if solver == "SCS":
            return dict(eps_abs=self.feasibility, eps_rel=self.gap, max_iters=100 * self.max_iter)
        return {}


DEFAULT_TOLERANCES = ToleranceProfile()


@dataclass
class SolveOutcome:
    """
    Result of one solve.

    ``values`` and ``duals`` are present iff status is 'optimal' or 'inaccurate'.
    """

    status: str
    values: Optional[Dict[str, np.ndarray]] = None
    duals: Optional[Dict[str, Any]] = None
    objective: Optional[float] = None
    iterations: Optional[int] = None
    wall_time: float = 0.0
    solver: str = ""
    psd_floor: Optional[float] = None
    message: str = ""

    @property
    def ok(self) -> bool:
        return self.status == "optimal"

    def usable(self, accept_inaccurate: bool = False) -> bool:
        return self.status == "optimal" or (accept_inaccurate and self.status == "inaccurate")

    def value(self, name: str) -> np.ndarray:
        if self.values is None:
            raise KeyError(f"No values for status '{self.status}'")
        return self.values[name]

    def diagnostics(self) -> dict:
        """Deterministic summary for artifacts (no timing)."""
        return {
            "status": self.status,
            "objective": self.objective,
            "iterations": self.iterations,
            "solver": self.solver,
            "psd_floor": self.psd_floor,
        }


def _pick_solver(requested: str) -> str:
    installed = cp.installed_solvers()
    if requested in installed:
        return requested
    for name in FALLBACK_SOLVERS:
        if name in installed:
            return name
    return requested


def _min_eig(value) -> float:
    mat = np.asarray(value, dtype=float)
    mat = 0.5 * (mat + mat.T)
    return float(np.linalg.eigvalsh(mat)[0])


def _collect(program: ConeProgram, problem: cp.Problem, status: str, solver: str, wall: float):
    outcome = SolveOutcome(status=status, solver=solver, wall_time=wall)
    stats = problem.solver_stats
    if stats is not None:
        outcome.iterations = stats.num_iters
    if status not in ("optimal", "inaccurate"):
        return outcome

    values = {}
    for name, block in program.blocks.items():
        val = block.variable.value
        values[name] = None if val is None else np.array(val, dtype=float)
    if any(v is None for v in values.values()):
        # solver reported success without a point
        outcome.status = "error"
        outcome.message = "solver returned no primal values"
        return outcome

    duals, floors = {}, []
    for entry in program.constraints:
        dual = entry.constraint.dual_value
        if entry.scales is not None and dual is not None:
            dual = np.asarray(dual, dtype=float) / entry.scales
        duals[entry.label] = dual
        if entry.expression is not None and entry.expression.value is not None:
            floors.append(_min_eig(entry.expression.value))
    outcome.values = values
    outcome.duals = duals
    outcome.objective = None if problem.value is None else float(problem.value)
    outcome.psd_floor = min(floors) if floors else None
    return outcome


def solve(program: ConeProgram, tol: ToleranceProfile = DEFAULT_TOLERANCES,
          retry_inaccurate: bool = True) -> SolveOutcome:
    """
    Solve ``program`` with tolerance profile ``tol``.

    An 'inaccurate' outcome is retried once with tolerances tightened 100x.
    Solver exceptions are reported as status 'error', never raised.

    Raises:
        AssemblyError: if the program does not validate
    """
    program.validate()
    problem = program.to_problem()
    solver = _pick_solver(tol.solver)

    start = time.perf_counter()
    try:
        problem.solve(solver=solver, **tol.solver_options(solver))
        status = _STATUS_MAP.get(problem.status, "error")
        message = ""
    except (cp.SolverError, ArithmeticError, ValueError) as exc:
        status, message = "error", str(exc)
    wall = time.perf_counter() - start

    outcome = _collect(program, problem, status, solver, wall)
    if message:
        outcome.message = message
    if outcome.status == "inaccurate" and retry_inaccurate:
        retry = solve(program, tol.tightened(), retry_inaccurate=False)
        retry.wall_time += wall
        return retry
    return outcome
