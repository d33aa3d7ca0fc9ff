"""
Cone program assembly on top of cvxpy.

A ``ConeProgram`` collects named variable blocks with cone memberships,
labelled affine rows, linear matrix inequalities and an objective. Blocks and
constraints keep their insertion order, so assembling the same logical
program twice gives the same cvxpy problem.
"""

from dataclasses import dataclass
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple, Union

import cvxpy as cp
import numpy as np
import scipy.sparse as sp

from quadcert.exceptions import AssemblyError

SCALAR_CONES = ("free", "nonnegative", "second_order")
MATRIX_CONES = ("free", "psd", "elementwise_nonnegative")
SENSES = (">=", "<=", "==")


@dataclass
class Block:
    name: str
    kind: str  # 'scalar' or 'matrix'
    dim: int
    cone: str
    variable: cp.Expression
    packed: Optional[cp.Variable] = None

    @property
    def size(self) -> int:
        if self.kind == "scalar":
            return self.dim
        return self.dim * (self.dim + 1) // 2


@dataclass
class ConstraintEntry:
    label: str
    kind: str  # 'rows', 'lmi', 'cone', 'generic'
    constraint: cp.Constraint
    rows: int = 0
    scales: Optional[np.ndarray] = None
    expression: Optional[cp.Expression] = None


def symmetric_from_packed(packed: cp.Expression, n: int) -> cp.Expression:
    """Symmetric n x n expression from its packed upper triangle (row-major)."""
    upper = cp.vec_to_upper_tri(packed)
    return upper + upper.T - cp.diag(cp.diag(upper))


class ConeProgram:
    """
    LP/QP/SDP instance with named blocks.

    Example::

        prog = ConeProgram("demo")
        x = prog.add_scalar_block("x", 1)
        prog.add_rows("lower", [("x", np.eye(1))], [3.0], ">=")
        prog.minimize(x[0])
    """

    def __init__(self, name: str = "program"):
        self.name = name
        self._blocks: Dict[str, Block] = {}
        self._constraints: List[ConstraintEntry] = []
        self._objective: Optional[cp.Expression] = None
        self._sense = "minimize"
        self.meta: dict = {}
        self._validated = False

    # blocks

    def _register(self, block: Block) -> cp.Expression:
        if block.name in self._blocks:
            raise AssemblyError(f"Block '{block.name}' already exists in '{self.name}'")
        self._blocks[block.name] = block
        self._validated = False
        return block.variable

    def add_scalar_block(self, name: str, size: int, cone: str = "free") -> cp.Variable:
        if cone not in SCALAR_CONES:
            raise AssemblyError(f"Unknown scalar cone '{cone}'")
        if size < 0:
            raise AssemblyError(f"Block '{name}' has negative size")
        var = cp.Variable(size, name=name)
        self._register(Block(name, "scalar", size, cone, var))
        if size and cone == "nonnegative":
            self._constraints.append(ConstraintEntry(f"{name}>=0", "cone", var >= 0, rows=size))
        elif size and cone == "second_order":
            self._constraints.append(ConstraintEntry(f"{name}:soc", "cone", cp.SOC(var[0], var[1:])))
        return var

    def add_matrix_block(self, name: str, dim: int, cone: str = "psd") -> cp.Expression:
        if cone not in MATRIX_CONES:
            raise AssemblyError(f"Unknown matrix cone '{cone}'")
        if dim < 1:
            raise AssemblyError(f"Matrix block '{name}' needs a positive dimension")
        if cone == "elementwise_nonnegative":
            packed = cp.Variable(dim * (dim + 1) // 2, nonneg=True, name=f"{name}_packed")
            var = symmetric_from_packed(packed, dim)
            self._register(Block(name, "matrix", dim, cone, var, packed=packed))
            return var
        var = cp.Variable((dim, dim), symmetric=True, name=name)
        self._register(Block(name, "matrix", dim, cone, var))
        if cone == "psd":
            self._constraints.append(ConstraintEntry(f"{name}:psd", "cone", var >> 0, expression=var))
        return var

    def block(self, name: str) -> cp.Expression:
        try:
            return self._blocks[name].variable
        except KeyError as exc:
            raise AssemblyError(f"Unknown block '{name}' in '{self.name}'") from exc

    @property
    def blocks(self) -> Dict[str, Block]:
        return dict(self._blocks)

    # constraints

    def add_rows(
        self,
        label: str,
        terms: Sequence[Tuple[str, Union[np.ndarray, sp.spmatrix]]],
        rhs,
        sense: str = ">=",
        normalize: bool = True,
    ):
        """
        Rows sum_k A_k @ block_k (sense) rhs.

        Each row is divided by its largest absolute coefficient before the
        solve; reported duals are mapped back to the unscaled rows.
        """
        if sense not in SENSES:
            raise AssemblyError(f"Unknown row sense '{sense}'")
        rhs = np.atleast_1d(np.asarray(rhs, dtype=float))
        n_rows = rhs.shape[0]
        if not terms:
            raise AssemblyError(f"Row group '{label}' has no terms")
        mats = []
        for name, A in terms:
            block = self._blocks.get(name)
            if block is None:
                raise AssemblyError(f"Row group '{label}' references unknown block '{name}'")
            if block.kind != "scalar":
                raise AssemblyError(f"Row group '{label}' needs a scalar block, '{name}' is a matrix")
            A = sp.csr_matrix(A)
            if A.shape != (n_rows, block.dim):
                raise AssemblyError(
                    f"Row group '{label}': block '{name}' expects shape {(n_rows, block.dim)}, got {A.shape}"
                )
            mats.append((block, A))

        scales = np.ones(n_rows)
        if normalize and mats:
            peak = np.zeros(n_rows)
            for _, A in mats:
                peak = np.maximum(peak, abs(A).max(axis=1).toarray().ravel())
            scales = np.where(peak > 0, peak, 1.0)
        inv = sp.diags(1.0 / scales)
        lhs = sum(cp.Constant(inv @ A) @ block.variable for block, A in mats)
        rhs_scaled = rhs / scales
        if sense == ">=":
            con = lhs >= rhs_scaled
        elif sense == "<=":
            con = lhs <= rhs_scaled
        else:
            con = lhs == rhs_scaled
        self._constraints.append(ConstraintEntry(label, "rows", con, rows=n_rows, scales=scales))
        self._validated = False
        return con

    def add_lmi(self, label: str, expr: cp.Expression, sense: str = "<<"):
        """expr << 0 (negative semidefinite) or expr >> 0, on the symmetric part of expr."""
        if len(expr.shape) != 2 or expr.shape[0] != expr.shape[1]:
            raise AssemblyError(f"LMI '{label}' needs a square expression, got shape {expr.shape}")
        sym = 0.5 * (expr + expr.T)
        if sense == "<<":
            con = sym << 0
        elif sense == ">>":
            con = sym >> 0
        else:
            raise AssemblyError(f"Unknown LMI sense '{sense}'")
        self._constraints.append(
            ConstraintEntry(label, "lmi", con, expression=-sym if sense == "<<" else sym)
        )
        self._validated = False
        return con

    def add_constraint(self, label: str, constraint: cp.Constraint):
        self._constraints.append(ConstraintEntry(label, "generic", constraint))
        self._validated = False
        return constraint

    @property
    def constraints(self) -> List[ConstraintEntry]:
        return list(self._constraints)

    # objective

    def minimize(self, expr):
        self._objective, self._sense = expr, "minimize"
        self._validated = False

    def maximize(self, expr):
        self._objective, self._sense = expr, "maximize"
        self._validated = False

    # bookkeeping

    @property
    def variable_count(self) -> int:
        return sum(b.size for b in self._blocks.values())

    @property
    def row_count(self) -> int:
        """Scalar affine inequality/equality rows, including nonnegativity of scalar blocks."""
        return sum(c.rows for c in self._constraints)

    def validate(self):
        """
        Check that every variable used by a constraint or the objective belongs to
        a declared block.

        Raises:
            AssemblyError: on unknown variables
        """
        known = set()
        for block in self._blocks.values():
            known.update(v.id for v in block.variable.variables())
        exprs = [c.constraint for c in self._constraints]
        if self._objective is not None and not np.isscalar(self._objective):
            exprs.append(self._objective)
        for expr in exprs:
            for var in expr.variables():
                if var.id not in known:
                    raise AssemblyError(f"'{self.name}' uses undeclared variable '{var.name()}'")
        self._validated = True
        return self

    def to_problem(self) -> cp.Problem:
        if not self._validated:
            self.validate()
        objective = self._objective if self._objective is not None else cp.Constant(0.0)
        wrap = cp.Minimize if self._sense == "minimize" else cp.Maximize
        return cp.Problem(wrap(objective), [c.constraint for c in self._constraints])

    def dump(self, path: Union[str, Path], solver: str = "CLARABEL") -> Path:
        """Write the solver-level data (triplet rows, cone tags) as plain text."""
        problem = self.to_problem()
        data, _, _ = problem.get_problem_data(solver)
        A = sp.coo_matrix(data["A"])
        dims = data["dims"]
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", encoding="utf-8") as f:
            f.write(f"# program {self.name}\n")
            f.write(f"# variables {A.shape[1]} rows {A.shape[0]}\n")
            for tag in ("zero", "nonneg", "exp", "soc", "psd"):
                value = getattr(dims, tag, None)
                if value is not None:
                    f.write(f"cone {tag} {value}\n")
            for j, value in enumerate(np.asarray(data["c"]).ravel()):
                if value != 0:
                    f.write(f"c {j} {value!r}\n")
            order = np.lexsort((A.col, A.row))
            for i, j, value in zip(A.row[order], A.col[order], A.data[order]):
                f.write(f"A {i} {j} {float(value)!r}\n")
            for i, value in enumerate(np.asarray(data["b"]).ravel()):
                if value != 0:
                    f.write(f"b {i} {float(value)!r}\n")
        return path
