"""
Tests for facet direction sets, layer polytopes and polytope-based bound tightening.
"""

import numpy as np
import pytest

from quadcert.exceptions import InconsistencyError, PreconditionError
from quadcert.network import Network, forward_trace, interval_propagate, sample_box
from quadcert.reach import box_directions
from quadcert.tighten import (
    LayerPolytope,
    TighteningReport,
    TightenOptions,
    facet_directions,
    layer_polytope,
    lp_preactivation_bounds,
    tighten_network_report,
)


def _box_polytope(lo, hi, layer=1):
    """Polytope given by its +-e_i rows only."""
    n = len(lo)
    A = np.array(box_directions(n))
    b = np.ravel([[h, -l] for l, h in zip(lo, hi)])
    return LayerPolytope(layer, A, b, ["basis"] * len(b))


class TestFacetDirections:
    def test_duplicates_dropped(self):
        """Singular vectors of the identity repeat the basis and are skipped."""
        dirs, prov = facet_directions(2, np.eye(2), svd_count=1)
        assert len(dirs) == 4
        assert prov == ["basis"] * 4

    def test_all_sources(self):
        """Basis, then singular directions, then the pairwise ones not already present."""
        dirs, prov = facet_directions(2, np.array([[1.0, 1.0]]), svd_count=1, pairwise=True)
        assert prov == ["basis"] * 4 + ["svd"] * 2 + ["pairwise"] * 2
        units = [d / np.linalg.norm(d) for d in dirs[4:6]]
        np.testing.assert_allclose(np.abs(units), np.full((2, 2), np.sqrt(0.5)))
        np.testing.assert_allclose(dirs[6:], [[1.0, -1.0], [-1.0, 1.0]])

    def test_svd_count_limit(self):
        with pytest.raises(PreconditionError, match="exceeds min dimension"):
            facet_directions(3, np.ones((1, 3)), svd_count=2)


class TestLayerPolytope:
    """Box extraction, containment and LP bounds."""

    def test_box(self):
        poly = _box_polytope([-1.0, 0.0], [1.0, 2.0])
        np.testing.assert_allclose(poly.box(), [[-1.0, 1.0], [0.0, 2.0]])
        assert poly.contains([[0.0, 1.0]])[0]
        assert not poly.contains([[0.0, 3.0]])[0]
        assert poly.facet_counts() == {"basis": 4, "svd": 0, "pairwise": 0}

    def test_lp_bounds_on_box(self):
        """On a box the LP gives the exact range of W theta + b."""
        poly = _box_polytope([-1.0, -1.0], [1.0, 1.0])
        out = lp_preactivation_bounds(poly, np.array([[1.0, 2.0], [0.0, -1.0]]), np.array([0.5, 0.0]))
        np.testing.assert_allclose(out, [[-2.5, 3.5], [-1.0, 1.0]], atol=1e-6)

    def test_lp_bounds_use_cut(self):
        """A diagonal facet theta_1 + theta_2 <= 1 lowers the bound of theta_1 + theta_2."""
        poly = _box_polytope([0.0, 0.0], [1.0, 1.0])
        poly = LayerPolytope(
            1,
            np.vstack([poly.A, [1.0, 1.0]]),
            np.append(poly.b, 1.0),
            poly.provenance + ["pairwise"],
        )
        out = lp_preactivation_bounds(poly, np.array([[1.0, 1.0]]), np.zeros(1))
        assert out[0, 1] == pytest.approx(1.0, abs=1e-6)
        assert out[0, 1] >= 1.0 - 1e-9
        assert out[0, 0] == pytest.approx(0.0, abs=1e-6)

    def test_empty_polytope(self):
        poly = LayerPolytope(1, np.array([[1.0], [-1.0]]), np.array([-1.0, -1.0]), ["basis", "basis"])
        with pytest.raises(InconsistencyError, match="empty"):
            lp_preactivation_bounds(poly, np.eye(1), np.zeros(1))


class TestTighteningReport:
    def test_width_reduction(self):
        report = TighteningReport(ibp=[np.array([[0.0, 2.0], [1.0, 1.0]])],
                                  tightened=[np.array([[0.0, 1.0], [1.0, 1.0]])], facet_counts=[{}])
        np.testing.assert_allclose(report.width_reduction(1), [50.0, 0.0])
        assert report.mean_reduction(1) == pytest.approx(25.0)
        assert report.to_record()["kind"] == "tightening_report"

    def test_options_record(self):
        options = TightenOptions(svd_count=3, pairwise=True)
        assert TightenOptions.from_record(options.to_record()) == options
        assert TightenOptions.from_record(None) == TightenOptions()


@pytest.mark.slow
class TestTightenNetwork:
    """Polytope propagation on a seeded two-hidden-layer ReLU network."""

    def test_layer_polytope_contains_samples(self, small_relu_net):
        net = small_relu_net
        bounds = interval_propagate(net)
        dirs, prov = facet_directions(net.hidden_sizes[0], net.weights[1], svd_count=2)
        poly = layer_polytope(net, 1, net.input_box, bounds, dirs, prov)
        _, posts, _ = forward_trace(net, sample_box(net.input_box, 1000, seed=5))
        assert np.all(poly.contains(posts[0], tol=1e-7))
        box = poly.box()
        assert np.all(box[:, 1] <= bounds.post[0][:, 1] + 1e-9)

    def test_tightened_bounds_sound_and_nested(self, small_relu_net):
        """Tightened intervals lie inside the interval bounds and still contain every sample."""
        net = small_relu_net
        bounds, report = tighten_network_report(net, None, TightenOptions(svd_count=2))
        ibp = interval_propagate(net)
        for layer in range(net.depth):
            assert np.all(bounds.pre[layer][:, 0] >= ibp.pre[layer][:, 0] - 1e-9)
            assert np.all(bounds.pre[layer][:, 1] <= ibp.pre[layer][:, 1] + 1e-9)
        pres, _, _ = forward_trace(net, sample_box(net.input_box, 1000, seed=6))
        for layer, pre in enumerate(pres):
            assert np.all(pre >= bounds.pre[layer][:, 0] - 1e-7)
            assert np.all(pre <= bounds.pre[layer][:, 1] + 1e-7)
        assert report.mean_reduction(1) == 0.0
        assert np.all(report.width_reduction(2) >= -1e-6)

    def test_mirrored_pair_halves_width(self):
        """
        relu(x) + relu(-x) - 0.5 on [-1, 1] has interval bounds [-0.5, 1.5] but
        true range [-0.5, 0.5]; the polytope along the singular direction (1, 1)
        recovers the upper bound, so the second-layer width drops by half.
        """
        net = Network(
            (np.array([[1.0], [-1.0]]), np.array([[1.0, 1.0]]), np.array([[1.0]])),
            (np.zeros(2), np.array([-0.5]), np.zeros(1)),
            ("relu", "relu"),
            input_box=np.array([[-1.0, 1.0]]),
            name="mirrored_pair",
        )
        ibp = interval_propagate(net)
        np.testing.assert_allclose(ibp.pre[1], [[-0.5, 1.5]])
        assert ibp.stability[1] == ("unstable",)
        bounds, report = tighten_network_report(net, None, TightenOptions(svd_count=1))
        assert bounds.pre[1][0, 1] < ibp.pre[1][0, 1] - 0.9
        assert bounds.pre[1][0, 1] >= 0.5 - 1e-7
        assert report.width_reduction(2)[0] >= 45.0
        assert report.mean_reduction(2) > report.mean_reduction(1)
