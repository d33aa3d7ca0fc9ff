"""
Tests for cone program assembly and the solver boundary.
"""

import cvxpy as cp
import numpy as np
import pytest

from quadcert.conic import ConeProgram, ToleranceProfile, solve, symmetric_from_packed
from quadcert.exceptions import AssemblyError


class TestAssembly:
    """Blocks, rows and bookkeeping."""

    def test_counts(self):
        """Nonnegative blocks add one row per entry."""
        prog = ConeProgram("counts")
        prog.add_scalar_block("c", 6)
        prog.add_scalar_block("s", 4, cone="nonnegative")
        prog.add_rows("rows", [("c", np.ones((4, 6))), ("s", np.eye(4))], np.zeros(4), ">=")
        assert prog.variable_count == 10
        assert prog.row_count == 8

    def test_packed_matrix_block_size(self):
        """Matrix blocks count their packed upper triangle."""
        prog = ConeProgram()
        prog.add_matrix_block("P", 3, cone="elementwise_nonnegative")
        prog.add_matrix_block("S", 2, cone="psd")
        assert prog.variable_count == 6 + 3

    def test_symmetric_from_packed(self):
        """Packed entries fill the upper triangle row by row and mirror below."""
        mat = symmetric_from_packed(cp.Constant(np.array([1.0, 2.0, 3.0])), 2).value
        np.testing.assert_allclose(mat, [[1.0, 2.0], [2.0, 3.0]])

    def test_duplicate_block(self):
        prog = ConeProgram("dup")
        prog.add_scalar_block("x", 1)
        with pytest.raises(AssemblyError, match="already exists"):
            prog.add_scalar_block("x", 2)

    def test_unknown_block(self):
        """Rows may only reference declared blocks."""
        prog = ConeProgram("unknown")
        prog.add_scalar_block("x", 1)
        with pytest.raises(AssemblyError, match="unknown block 'y'"):
            prog.add_rows("r", [("y", np.eye(1))], [0.0])

    def test_shape_mismatch(self):
        prog = ConeProgram("shape")
        prog.add_scalar_block("x", 2)
        with pytest.raises(AssemblyError, match="expects shape"):
            prog.add_rows("r", [("x", np.ones((1, 3)))], [0.0])

    def test_rows_on_matrix_block(self):
        prog = ConeProgram("matrix")
        prog.add_matrix_block("X", 2)
        with pytest.raises(AssemblyError, match="needs a scalar block"):
            prog.add_rows("r", [("X", np.ones((1, 2)))], [0.0])

    def test_undeclared_variable(self):
        """Constraints on foreign variables fail validation."""
        prog = ConeProgram("foreign")
        prog.add_scalar_block("x", 1)
        stray = cp.Variable(1, name="stray")
        prog.add_constraint("stray", stray >= 0)
        with pytest.raises(AssemblyError, match="undeclared variable 'stray'"):
            prog.validate()

    def test_unknown_cone(self):
        with pytest.raises(AssemblyError, match="Unknown scalar cone"):
            ConeProgram().add_scalar_block("x", 1, cone="exponential")


class TestSolve:
    """Solving through cvxpy."""

    def test_lp_value_and_dual(self):
        """Duals are reported for the unscaled rows."""
        prog = ConeProgram("lp")
        x = prog.add_scalar_block("x", 1)
        prog.add_rows("lower", [("x", 4.0 * np.eye(1))], [12.0], ">=")
        prog.minimize(x[0])
        outcome = solve(prog)
        assert outcome.ok
        np.testing.assert_allclose(outcome.value("x"), [3.0], atol=1e-6)
        np.testing.assert_allclose(outcome.objective, 3.0, atol=1e-6)
        np.testing.assert_allclose(outcome.duals["lower"], [0.25], atol=1e-6)

    def test_infeasible(self):
        """Infeasible programs report a status and no values."""
        prog = ConeProgram("infeasible")
        x = prog.add_scalar_block("x", 1)
        prog.add_rows("lo", [("x", np.eye(1))], [1.0], ">=")
        prog.add_rows("hi", [("x", np.eye(1))], [0.0], "<=")
        prog.minimize(x[0])
        outcome = solve(prog)
        assert outcome.status == "infeasible"
        assert outcome.values is None
        assert not outcome.usable(accept_inaccurate=True)

    def test_sdp_floor(self):
        """The PSD floor of a tight semidefinite block is close to zero."""
        prog = ConeProgram("sdp")
        X = prog.add_matrix_block("X", 2, cone="psd")
        prog.add_constraint("offdiag", X[0, 1] == 1.0)
        prog.minimize(cp.trace(X))
        outcome = solve(prog)
        assert outcome.ok
        np.testing.assert_allclose(outcome.objective, 2.0, atol=1e-5)
        assert abs(outcome.psd_floor) < 1e-5

    def test_diagnostics_have_no_timing(self):
        prog = ConeProgram("diag")
        x = prog.add_scalar_block("x", 1, cone="nonnegative")
        prog.minimize(x[0])
        record = solve(prog).diagnostics()
        assert "wall_time" not in record
        assert record["status"] == "optimal"

    def test_tightened_profile(self):
        """Tightening divides tolerances and doubles the iteration cap."""
        tol = ToleranceProfile(feasibility=1e-6, gap=1e-6, max_iter=100).tightened()
        assert tol.feasibility == pytest.approx(1e-8)
        assert tol.gap == pytest.approx(1e-8)
        assert tol.max_iter == 200

    def test_dump(self, tmp_path):
        """Solver-level data is written as plain text."""
        prog = ConeProgram("dumped")
        x = prog.add_scalar_block("x", 2, cone="nonnegative")
        prog.add_rows("sum", [("x", np.ones((1, 2)))], [1.0], ">=")
        prog.minimize(cp.sum(x))
        path = prog.dump(tmp_path / "prog.txt")
        text = path.read_text()
        assert text.startswith("# program dumped")
        assert "\nA " in text
