"""
Tests for the lifted basis, quadratic constraints, the network LMI and the
reachability and safety analyses built on it.
"""

import numpy as np
import pytest

from quadcert.exceptions import PreconditionError
from quadcert.network import forward_eval, interval_propagate, random_network, sample_box
from quadcert.reach import (
    ActivationBlockSpec,
    CertFamily,
    FacetResult,
    InputSetQC,
    LiftedBasis,
    ReachPolytope,
    average_width,
    box_directions,
    builtin_family,
    characterization,
    facet_bound,
    facet_lines,
    not_minimal_rows,
    output_interval,
    prepare_analysis,
    projection_directions,
    reach_polytope,
    relu_exact_qcs,
    repeated_block_matrix,
    s_matrix,
    sector_qc,
    solve_facet_bound,
    verify_disjunction,
    verify_halfspace,
    verify_polyhedron,
)
from quadcert.reach.directions import polygon_vertices
from quadcert.reach.lmi import FacetTerm


def _random_net(seed):
    """Seeded two-hidden-layer ReLU network of varying shape on the unit box."""
    sizes = [2 + seed % 2, 4 + seed % 5, 4 + (seed * 3) % 5, 2]
    net = random_network(sizes, seed=seed)
    return net.replace(input_box=np.tile([-1.0, 1.0], (sizes[0], 1)))


def _square(bounds=(1.0, 0.0, 2.0, 1.0)):
    """Polytope with facets +-e_1, +-e_2 and the given offsets."""
    facets = [FacetResult(d, b) for d, b in zip(box_directions(2), bounds)]
    return ReachPolytope(facets, 2, name="square")


class TestLiftedBasis:
    """Extraction maps against true trajectories."""

    def test_dimension(self, tied_outputs):
        basis = LiftedBasis(tied_outputs)
        assert basis.n_nonlinear == 2
        assert basis.dim == 2 + 2 + 1

    def test_maps_follow_trajectories(self, tied_outputs):
        """E_x, E_y and E_neuron read x, y and (phi, theta) off the lifted vector."""
        basis = LiftedBasis(tied_outputs)
        xs = sample_box(tied_outputs.input_box, 25, seed=0)
        xi = basis.lift(xs)
        np.testing.assert_allclose((basis.E_x @ xi.T).T, np.column_stack([xs, np.ones(25)]))
        np.testing.assert_allclose((basis.E_y @ xi.T).T[:, :2], forward_eval(tied_outputs, xs), atol=1e-12)
        pre = xs @ np.array([1.0, -1.0])
        rows = basis.E_neuron(1, 0).toarray() @ xi.T
        np.testing.assert_allclose(rows[0], pre, atol=1e-12)
        np.testing.assert_allclose(rows[1], np.maximum(pre, 0.0), atol=1e-12)

    def test_identity_layers_not_lifted(self, linear_net):
        """Identity neurons are substituted, so only x and the constant remain."""
        basis = LiftedBasis(linear_net)
        assert basis.n_nonlinear == 0
        assert basis.dim == 3
        np.testing.assert_allclose(basis.E_y[0], [2.0, -1.0, 0.5])

    def test_norm_bound(self, small_relu_net):
        basis = LiftedBasis(small_relu_net)
        bounds = interval_propagate(small_relu_net)
        xi = basis.lift(sample_box(small_relu_net.input_box, 200, seed=1))
        assert np.all(np.sum(xi**2, axis=1) <= basis.norm_bound(bounds) + 1e-12)


class TestQuadraticConstraints:
    """Built-in constraints hold on the activation graphs."""

    def test_relu_exact(self):
        xs = np.linspace(-3.0, 3.0, 61)
        for q in relu_exact_qcs():
            assert np.all(q(xs, np.maximum(xs, 0.0)) >= -1e-12)

    def test_relu_exact_iff_on_grid(self):
        """On a grid of (x, y) pairs the three constraints all hold exactly on the graph."""
        xs = np.arange(-60, 61) / 20.0
        X, Y = np.meshgrid(xs, xs)
        feasible = np.ones_like(X, dtype=bool)
        for q in relu_exact_qcs():
            feasible &= q(X, Y) >= -1e-12
        on_graph = Y == np.maximum(X, 0.0)
        assert on_graph.sum() == 121
        np.testing.assert_array_equal(feasible, on_graph)

    def test_sector_on_tanh(self):
        xs = np.linspace(-4.0, 4.0, 81)
        assert np.all(sector_qc()(xs, np.tanh(xs)) >= -1e-12)

    def test_repeated_block_on_relu(self):
        """An elementwise-nonnegative Q2 gives a valid constraint on relu pairs."""
        rng = np.random.default_rng(0)
        A = rng.uniform(0.0, 1.0, size=(4, 4))
        M, constraints = repeated_block_matrix(np.array([0.5, 2.0]), A + A.T)
        assert constraints == []
        phi = rng.normal(size=(100, 2))
        z = np.column_stack([phi, np.maximum(phi, 0.0)])
        assert np.all(np.einsum("ni,ij,nj->n", z, M, z) >= -1e-12)

    def test_single_relu_block(self):
        """With Q2 = 0 a size-one block is 2 q1 theta (phi - theta)."""
        M, _ = repeated_block_matrix(np.array([1.0]), np.zeros((2, 2)))
        np.testing.assert_allclose(M, [[0.0, 1.0], [1.0, -2.0]])

    def test_builtin_family(self):
        assert len(builtin_family("relu_exact").forms) == 3
        assert builtin_family("sector", "tanh").activation == "tanh"
        with pytest.raises(PreconditionError, match="Unknown built-in QC family"):
            builtin_family("slope")

    def test_family_domain(self):
        family = CertFamily("sat", (sector_qc(),), "sat", domain=(-5.0, 5.0), layers=(1,))
        assert family.covers((-1.0, 1.0))
        assert not family.covers((-6.0, 1.0))
        assert family.applies_to(1, "sat")
        assert not family.applies_to(2, "sat")
        assert not family.applies_to(1, "tanh")

    def test_empty_family(self):
        with pytest.raises(PreconditionError, match="has no forms"):
            CertFamily("empty", (), "relu")


class TestInputSet:
    def test_box_constraints(self):
        """Each coordinate gives (x_i - lo)(hi - x_i)."""
        qc = InputSetQC.from_box([[-1.0, 1.0], [0.0, 2.0]])
        assert qc.n_x == 2
        np.testing.assert_allclose(qc.evaluate([[0.0, 1.0], [2.0, 1.0]]), [[1.0, 1.0], [-3.0, 1.0]])

    def test_inverted_box(self):
        with pytest.raises(PreconditionError, match="lo > hi"):
            InputSetQC.from_box([[1.0, -1.0]])

    def test_s_matrix(self):
        """[y; 1]^T S [y; 1] = 2 (c^T y - d)."""
        c, d = np.array([1.0, -2.0]), 0.5
        S = s_matrix(c, d)
        for y in ([0.0, 0.0], [1.0, 3.0], [-2.0, 0.25]):
            z = np.append(y, 1.0)
            assert z @ S @ z == pytest.approx(2.0 * (c @ y - d))


class TestActivationSpec:
    """Characterizations and ActivationBlockSpec checks."""

    def test_characterizations(self):
        assert not characterization("EP").use_block_repeated
        comb = characterization("COMB", block_size=4)
        assert comb.use_block_repeated
        assert comb.bounds_source == "ibp"
        assert characterization("COMB-PP").bounds_source == "tightened"

    def test_unknown_characterization(self):
        with pytest.raises(PreconditionError, match="Unknown characterization"):
            characterization("DeepPoly")

    def test_needs_a_source(self):
        with pytest.raises(PreconditionError, match="at least one constraint source"):
            ActivationBlockSpec("empty")

    def test_bad_complementarity(self):
        with pytest.raises(PreconditionError, match="relu_complementarity"):
            ActivationBlockSpec("bad", relu_exact=True, relu_complementarity="equality")

    def test_multiplier_counts(self, one_neuron):
        """One input constraint, three exact ReLU constraints and two local bounds."""
        ctx = prepare_analysis(one_neuron, one_neuron.input_box, characterization("EP"))
        assert ctx.assembly.multiplier_counts() == {"input": 1, "relu_exact": 3, "local": 2}
        assert ctx.lifted_dim == 3

    def test_family_outside_domain_skipped(self, one_neuron):
        """A family verified on a narrower domain is not applied and a warning is issued."""
        family = CertFamily("narrow", (sector_qc(),), "relu", domain=(-0.5, 0.5))
        act = ActivationBlockSpec("narrow", families=(family,), relu_exact=True)
        with pytest.warns(UserWarning, match="outside a QC family domain"):
            ctx = prepare_analysis(one_neuron, one_neuron.input_box, act)
        assert len(ctx.assembly.skipped) == 1

    def test_input_dimension_mismatch(self, one_neuron, unit_box_2d):
        with pytest.raises(PreconditionError, match="must have 1 rows"):
            prepare_analysis(one_neuron, unit_box_2d, characterization("EP"))

    def test_zero_direction(self):
        with pytest.raises(PreconditionError, match="nonzero"):
            FacetTerm([0.0, 0.0])


class TestFacetBounds:
    """Facet offsets of a single ReLU on [-1, 1]."""

    @pytest.mark.parametrize("complementarity", ["inequality", "free"])
    def test_one_neuron(self, one_neuron, complementarity):
        """relu on [-1, 1] has range [0, 1]; both facets are tight."""
        act = characterization("EP", relu_complementarity=complementarity)
        upper = solve_facet_bound(one_neuron, one_neuron.input_box, act, [1.0])
        lower = solve_facet_bound(one_neuron, one_neuron.input_box, act, [-1.0])
        assert upper == pytest.approx(1.0, abs=1e-3)
        assert upper >= 1.0 - 1e-7
        assert lower == pytest.approx(0.0, abs=1e-3)
        assert lower >= -1e-7

    def test_inflation_reported(self, one_neuron):
        ctx = prepare_analysis(one_neuron, one_neuron.input_box, characterization("EP"))
        result = facet_bound(ctx, [1.0])
        assert result.ok
        assert result.inflation >= 0.0
        assert result.bound == pytest.approx(result.raw + result.inflation)
        assert "wall_time" not in result.diagnostics

    def test_linear_network_exact(self, linear_net):
        """Without nonlinear neurons the facets are the exact box support."""
        act = ActivationBlockSpec("local", local_bounds=True)
        poly = reach_polytope(linear_net, linear_net.input_box, act, box_directions(1))
        lo, hi = output_interval(poly, 0)
        assert hi == pytest.approx(3.5, abs=1e-3)
        assert lo == pytest.approx(-2.5, abs=1e-3)

    def test_needs_directions(self, one_neuron):
        with pytest.raises(PreconditionError, match="at least one direction"):
            reach_polytope(one_neuron, one_neuron.input_box, characterization("EP"), [])

    @pytest.mark.slow
    def test_polytope_contains_samples(self, small_relu_net):
        """Every sampled output lies in the certified polytope, and COMB is no looser than EP."""
        dirs = projection_directions(2, count=8)
        ep = reach_polytope(small_relu_net, small_relu_net.input_box, characterization("EP"), dirs)
        comb = reach_polytope(small_relu_net, small_relu_net.input_box,
                              characterization("COMB", block_size=4), dirs)
        ys = forward_eval(small_relu_net, sample_box(small_relu_net.input_box, 2000, seed=4))
        for poly in (ep, comb):
            assert not poly.failed
            assert np.all(poly.contains(ys, tol=1e-9))
        assert average_width(comb) <= average_width(ep) + 1e-4


@pytest.fixture(scope="module")
def random_net_polytopes():
    """EP, COMB and COMB-PP box polytopes of ten seeded networks."""
    results = []
    for seed in range(10):
        net = _random_net(seed)
        polys = {
            name: reach_polytope(net, net.input_box, characterization(name, block_size=3), box_directions(2))
            for name in ("EP", "COMB", "COMB-PP")
        }
        results.append((seed, net, polys))
    return results


@pytest.mark.slow
class TestCharacterizationsOnRandomNets:
    """Soundness and relative tightness of the three characterizations."""

    def test_contains_samples(self, random_net_polytopes):
        for seed, net, polys in random_net_polytopes:
            ys = forward_eval(net, sample_box(net.input_box, 100_000, seed=seed))
            for name, poly in polys.items():
                assert not poly.failed, (seed, name)
                assert np.all(poly.contains(ys, tol=1e-6)), (seed, name)

    def test_width_ordering(self, random_net_polytopes):
        """Mean box widths: COMB-PP <= COMB <= EP, up to facet inflation."""
        widths = {name: [] for name in ("EP", "COMB", "COMB-PP")}
        for _, _, polys in random_net_polytopes:
            for name, poly in polys.items():
                intervals = [output_interval(poly, k) for k in range(2)]
                widths[name].append(sum(hi - lo for lo, hi in intervals))
        mean = {name: float(np.mean(w)) for name, w in widths.items()}
        assert mean["COMB"] <= mean["EP"] + 1e-5
        assert mean["COMB-PP"] <= mean["COMB"] + 1e-5


class TestSafety:
    """Halfspace, polyhedron and disjunction verdicts on tied outputs (y2 = y1 - 1)."""

    def test_tight_halfspace(self, tied_outputs):
        verdict = verify_halfspace(
            tied_outputs, tied_outputs.input_box, characterization("EP"), [-1.0, 1.0], -1.0
        )
        assert verdict.verdict == "verified"
        assert verdict.certified_bound == pytest.approx(-1.0, abs=1e-6)

    def test_false_halfspace(self, tied_outputs):
        """y1 - y2 = 1 everywhere, so y1 - y2 <= 0.5 is never verified."""
        verdict = verify_halfspace(
            tied_outputs, tied_outputs.input_box, characterization("EP"), [1.0, -1.0], 0.5
        )
        assert verdict.verdict == "unknown"
        assert verdict.to_record()["verdict"] == "unknown"

    def test_polyhedron(self, tied_outputs):
        rows = [([-1.0, 1.0], -1.0), ([1.0, -1.0], 1.0)]
        ok, verdicts = verify_polyhedron(tied_outputs, tied_outputs.input_box, characterization("EP"), rows)
        assert ok
        assert len(verdicts) == 2

    @pytest.mark.parametrize("mode", ["joint", "separate"])
    def test_not_minimal(self, tied_outputs, mode):
        """Output 0 is never the unique minimum."""
        rows = not_minimal_rows(2, 0)
        verdict = verify_disjunction(
            tied_outputs, tied_outputs.input_box, characterization("EP"), rows, mode=mode
        )
        assert verdict.verified
        assert verdict.active == [0]

    def test_not_minimal_rows(self):
        rows = not_minimal_rows(3, 1)
        np.testing.assert_allclose([c for c, _ in rows], [[1.0, -1.0, 0.0], [0.0, -1.0, 1.0]])
        with pytest.raises(PreconditionError, match="outside"):
            not_minimal_rows(2, 2)

    def test_unknown_mode(self, tied_outputs):
        with pytest.raises(PreconditionError, match="Unknown disjunction mode"):
            verify_disjunction(tied_outputs, tied_outputs.input_box, characterization("EP"),
                               not_minimal_rows(2, 0), mode="any")

    def test_empty_disjunction(self, tied_outputs):
        with pytest.raises(PreconditionError, match="at least one row"):
            verify_disjunction(tied_outputs, tied_outputs.input_box, characterization("EP"), [])

    @pytest.mark.slow
    @pytest.mark.parametrize("seed", range(5))
    def test_random_net_halfspaces(self, seed):
        """A certified facet bound verifies; an offset below a sampled output does not."""
        net = _random_net(seed)
        act = characterization("EP")
        ctx = prepare_analysis(net, net.input_box, act)
        c = np.random.default_rng(seed).normal(size=2)
        c /= np.linalg.norm(c)
        bound = solve_facet_bound(net, net.input_box, act, c, context=ctx)
        sampled = float(np.max(forward_eval(net, sample_box(net.input_box, 20_000, seed=seed)) @ c))
        assert bound >= sampled - 1e-7
        assert verify_halfspace(net, net.input_box, act, c, bound + 1e-6, context=ctx).verdict == "verified"
        below = verify_halfspace(net, net.input_box, act, c, sampled - 1e-3, context=ctx)
        assert below.verdict == "unknown"
        assert not below.verified


class TestDirections:
    """Direction sets and width metrics."""

    def test_box_directions(self):
        np.testing.assert_allclose(box_directions(2), [[1, 0], [-1, 0], [0, 1], [0, -1]])

    def test_projection_axes_present(self):
        """Four uniform angles already hit every in-plane axis."""
        dirs = projection_directions(3, (0, 1), count=4)
        np.testing.assert_allclose(dirs, [[1, 0, 0], [0, 1, 0], [-1, 0, 0], [0, -1, 0]], atol=1e-15)

    def test_projection_axes_appended(self):
        """Missing axis directions come after the angular ones."""
        dirs = projection_directions(2, count=3)
        assert len(dirs) == 6
        np.testing.assert_allclose(dirs[3:], [[-1, 0], [0, 1], [0, -1]])

    def test_invalid_plane(self):
        with pytest.raises(PreconditionError, match="Invalid projection plane"):
            projection_directions(2, (0, 0))

    def test_widths(self):
        poly = _square()
        assert average_width(poly) == pytest.approx(2.0)
        assert output_interval(poly, 0) == pytest.approx((0.0, 1.0))
        assert output_interval(poly, 1) == pytest.approx((-1.0, 2.0))

    def test_failed_facets_ignored(self):
        """Facets without a bound take no part in A, b or containment."""
        facets = [FacetResult(d, b) for d, b in zip(box_directions(2), (1.0, 1.0, np.inf, 1.0))]
        poly = ReachPolytope(facets, 2)
        assert poly.A.shape == (3, 2)
        assert len(poly.failed) == 1
        assert poly.contains([[0.0, 5.0]])[0]
        assert not poly.contains([[2.0, 0.0]])[0]
        assert np.isinf(poly.support([0.0, 1.0]))
        assert np.isnan(average_width(ReachPolytope(facets[2:], 2)))

    def test_polygon(self):
        A = np.array(box_directions(2))
        verts = polygon_vertices(A, np.ones(4))
        assert verts.shape == (4, 2)
        np.testing.assert_allclose(np.sort(np.abs(verts), axis=0), np.ones((4, 2)))
        lines = facet_lines(_square((1.0, 1.0, 1.0, 1.0)))
        assert lines.shape == (4, 7)
