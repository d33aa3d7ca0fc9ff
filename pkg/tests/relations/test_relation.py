"""
Tests for scalar relations and their polynomial pieces.
"""

import numpy as np
import pytest

from quadcert.exceptions import AmbiguityError, DomainError, ParseError, PreconditionError
from quadcert.forms import QuadraticForm
from quadcert.relations import (
    Polynomial2,
    ScalarRelation,
    SemialgebraicPiece,
    apply_odd_symmetry,
    dump_relation,
    eval_graph,
    eval_relation,
    get_evaluator,
    interval_constraint,
    load_relation,
    relation_digest,
)


def _pieces(*specs):
    return tuple(
        SemialgebraicPiece.from_graph(interval, Polynomial2.from_x_coeffs(coeffs), label=label)
        for label, interval, coeffs in specs
    )


class TestPolynomial2:
    """Sparse bivariate polynomial arithmetic."""

    def test_zero_coefficients_are_dropped(self):
        """Cancelling terms leave no entry behind."""
        x = Polynomial2.x()
        assert (x - x).is_zero
        assert dict((x - x).terms) == {}

    def test_interval_constraint_sign(self):
        """(x - a)(b - x) is nonnegative exactly on [a, b]."""
        g = interval_constraint(-1.0, 2.0)
        assert g(0.5) > 0
        assert g(-1.0) == pytest.approx(0.0)
        assert g(2.0) == pytest.approx(0.0)
        assert g(3.0) < 0
        assert g.degree == 2

    def test_affine_substitution(self):
        """p(shift + scale*u) agrees with p evaluated at the mapped point."""
        x, y = Polynomial2.x(), Polynomial2.y()
        p = x ** 3 - 2 * x * y + 1.5
        q = p.affine_x(0.5, 2.0)
        for u, v in [(0.0, 1.0), (-0.3, 2.0), (1.2, -0.7)]:
            assert q(u, v) == pytest.approx(p(0.5 + 2.0 * u, v))

    def test_negative_power_rejected(self):
        """Only non-negative integer powers are supported."""
        with pytest.raises(ValueError, match="non-negative integer"):
            Polynomial2.x() ** -1

    def test_records_roundtrip(self):
        """Monomial records rebuild the same polynomial."""
        p = Polynomial2.from_records([{"x": 2, "y": 0, "c": 1.0}, {"x": 0, "y": 1, "c": -3.0}])
        assert Polynomial2.from_records(p.to_records()) == p


class TestScalarRelation:
    """Relation construction and evaluation."""

    def test_eval_sat(self, sat_relation):
        """Saturation clips to [-1, 1]."""
        assert eval_relation(sat_relation, 3.0) == pytest.approx(1.0)
        assert eval_relation(sat_relation, 0.5) == pytest.approx(0.5)
        assert eval_relation(sat_relation, -2.0) == pytest.approx(-1.0)

    def test_eval_at_breakpoint(self, sat_relation):
        """Both pieces agree at the shared end point."""
        assert eval_relation(sat_relation, 1.0) == pytest.approx(1.0)
        assert sat_relation.breakpoints() == (-1.0, 1.0)

    def test_eval_tanh(self, tanh_relation):
        """Evaluator relations go through numpy."""
        assert eval_relation(tanh_relation, 0.0) == pytest.approx(0.0)
        np.testing.assert_allclose(eval_graph(tanh_relation, [0.5, -1.0]), np.tanh([0.5, -1.0]))

    def test_outside_domain(self, sat_relation):
        """Points outside the domain raise DomainError."""
        with pytest.raises(DomainError, match="outside the domain"):
            eval_relation(sat_relation, 7.0)

    def test_declared_symmetry_holds(self, sat_relation, tanh_relation):
        """Both bundled relations are odd."""
        assert sat_relation.symmetry == "odd"
        assert sat_relation.check_symmetry(n=200, seed=1)
        assert tanh_relation.check_symmetry(n=200, seed=1)

    def test_uncovered_gap(self):
        """Pieces must cover the whole domain."""
        pieces = _pieces(("a", (-1.0, 0.0), [0.0]), ("b", (0.5, 1.0), [0.0]))
        with pytest.raises(DomainError, match="uncovered"):
            ScalarRelation("gap", "piecewise_polynomial", (-1.0, 1.0), pieces=pieces)

    def test_disagreeing_pieces(self):
        """Overlapping pieces with different values are ambiguous."""
        pieces = _pieces(("a", (-1.0, 0.0), [0.0]), ("b", (0.0, 1.0), [1.0]))
        with pytest.raises(AmbiguityError, match="disagree"):
            ScalarRelation("jump", "piecewise_polynomial", (-1.0, 1.0), pieces=pieces)

    def test_evaluator_needs_lipschitz(self):
        """An evaluator relation without a positive Lipschitz bound is rejected."""
        with pytest.raises(PreconditionError, match="Lipschitz"):
            ScalarRelation("t", "evaluator", (-1.0, 1.0), evaluator=get_evaluator("tanh"), lipschitz=0.0)

    def test_unknown_evaluator(self):
        """Unknown evaluator names are parse errors."""
        with pytest.raises(ParseError, match="Unknown evaluator"):
            get_evaluator("softsign")

    def test_parameterized_saturation(self):
        """'sat(2)' clips at 2 and declares its breakpoints."""
        ev = get_evaluator("sat(2)")
        np.testing.assert_allclose(ev([-3.0, 1.0, 3.0]), [-2.0, 1.0, 2.0])
        assert ev.breakpoints == (-2.0, 2.0)

    def test_tanh_taylor_coefficients(self):
        """tanh(x) = x - x^3/3 + ... around zero."""
        coeffs = get_evaluator("tanh").taylor_coefficients(0.0, 3)
        np.testing.assert_allclose(coeffs, [0.0, 1.0, 0.0, -1.0 / 3.0], atol=1e-12)


class TestOddSymmetry:
    """Mirroring quadratic forms through the origin."""

    def test_involution(self):
        """Applying the mirror twice returns the original coefficients."""
        q = QuadraticForm((1.0, -2.0, 0.5, 0.3, -0.7, 1.1), tag="S1", orientation="upper")
        twice = apply_odd_symmetry(apply_odd_symmetry(q))
        np.testing.assert_allclose(twice.coeffs, q.coeffs)

    def test_values_mirror(self):
        """q'(x, y) equals q(-x, -y)."""
        q = QuadraticForm((1.0, -2.0, 0.5, 0.3, -0.7, 1.1))
        mirrored = apply_odd_symmetry(q)
        for x, y in [(0.2, 0.4), (-1.0, 0.3), (2.0, -1.5)]:
            assert mirrored(x, y) == pytest.approx(q(-x, -y))


class TestRelationFiles:
    """Spec file loading and digests."""

    def test_bundled_sections(self, sat_relation):
        """Generation and verification sections are kept with the relation."""
        assert set(sat_relation.sections) == {"generation", "verification"}
        assert len(sat_relation.pieces) == 3

    def test_dump_reload_digest(self, sat_relation, tanh_relation):
        """Reloading a dumped relation keeps its digest."""
        for rel in (sat_relation, tanh_relation):
            again = load_relation(dump_relation(rel))
            assert relation_digest(again) == relation_digest(rel)

    def test_digest_changes_with_content(self, sat_relation):
        """A different domain gives a different digest."""
        data = dump_relation(sat_relation)
        data["domain"] = [-4.0, 4.0]
        data["pieces"][0]["interval"] = [-4.0, -1.0]
        data["pieces"][2]["interval"] = [1.0, 4.0]
        assert relation_digest(load_relation(data)) != relation_digest(sat_relation)

    def test_missing_kind(self):
        """A document without 'kind' is a parse error."""
        with pytest.raises(ParseError, match="missing or malformed"):
            load_relation({"domain": [-1, 1]})
