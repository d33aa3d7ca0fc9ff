"""
Tests for local, global and exterior sample generation.
"""

import numpy as np
import pytest

from quadcert.exceptions import DomainError, PreconditionError, SamplingError
from quadcert.relations import anchor_points, check_on_graph, sample_exterior, sample_graph


class TestSampleGraph:
    """Points on the graph."""

    def test_points_lie_on_graph(self, sat_relation):
        """Every sample satisfies the relation."""
        pts = sample_graph(sat_relation, (-3.0, 3.0), 50, seed=0)
        assert pts.shape == (50, 2)
        assert check_on_graph(sat_relation, pts)
        assert np.all((pts[:, 0] >= -3.0) & (pts[:, 0] <= 3.0))

    def test_deterministic_in_seed(self, tanh_relation):
        """The same seed gives the same samples, another seed does not."""
        a = sample_graph(tanh_relation, (-2.0, 0.0), 20, seed=7, placement="boundary_weighted")
        b = sample_graph(tanh_relation, (-2.0, 0.0), 20, seed=7, placement="boundary_weighted")
        c = sample_graph(tanh_relation, (-2.0, 0.0), 20, seed=8, placement="boundary_weighted")
        np.testing.assert_array_equal(a, b)
        assert not np.array_equal(a, c)

    def test_boundary_weighted_clusters(self, sat_relation):
        """At least half the points sit within 10% of the ends or breakpoints."""
        pts = sample_graph(sat_relation, (-1.5, -0.5), 10, seed=0, placement="boundary_weighted")
        anchors = np.array([-1.5, -1.0, -0.5])
        near = np.min(np.abs(pts[:, 0][:, None] - anchors[None, :]), axis=1) <= 0.1 + 1e-9
        assert np.sum(near) >= 5

    def test_single_point_interval(self, sat_relation):
        """A degenerate interval repeats its only point."""
        pts = sample_graph(sat_relation, (2.0, 2.0), 3, seed=0)
        np.testing.assert_allclose(pts, [[2.0, 1.0]] * 3)

    def test_requires_samples(self, sat_relation):
        """n = 0 is rejected."""
        with pytest.raises(PreconditionError, match="At least one sample is required"):
            sample_graph(sat_relation, (-1.0, 1.0), 0, seed=0)

    def test_empty_interval(self, sat_relation):
        """a > b is rejected."""
        with pytest.raises(DomainError, match="Empty interval"):
            sample_graph(sat_relation, (1.0, -1.0), 5, seed=0)

    def test_interval_outside_domain(self, sat_relation):
        """Intervals must stay inside the relation's domain."""
        with pytest.raises(DomainError, match="leaves the domain"):
            sample_graph(sat_relation, (-6.0, 0.0), 5, seed=0)

    def test_unknown_placement(self, sat_relation):
        with pytest.raises(PreconditionError, match="Unknown placement"):
            sample_graph(sat_relation, (-1.0, 1.0), 5, seed=0, placement="random")


class TestAnchors:
    def test_domain_ends_and_breakpoints(self, sat_relation):
        """Anchors are the domain ends plus the two saturation corners."""
        np.testing.assert_allclose(
            anchor_points(sat_relation), [[-5.0, -1.0], [-1.0, -1.0], [1.0, 1.0], [5.0, 1.0]]
        )


class TestSampleExterior:
    """Points off the graph."""

    def test_offsets_applied(self, sat_relation):
        """Each x contributes one point per offset."""
        pts = sample_exterior(sat_relation, (-5.0, -1.2), 10, [0.5], seed=0)
        assert pts.shape == (10, 2)
        np.testing.assert_allclose(pts[:, 1], -0.5)

    def test_two_offsets(self, tanh_relation):
        """Offsets of both signs give points on both sides of the graph."""
        pts = sample_exterior(tanh_relation, (-2.0, 0.0), 4, [0.2, -0.2], seed=1)
        gap = pts[:, 1] - np.tanh(pts[:, 0])
        assert pts.shape == (8, 2)
        np.testing.assert_allclose(np.sort(gap), [-0.2] * 4 + [0.2] * 4, atol=1e-12)

    def test_targets_appended(self, sat_relation):
        """Explicit targets are kept after the sampled points."""
        pts = sample_exterior(sat_relation, (-2.0, -1.0), 3, [0.4], seed=0, targets=[(0.0, 0.5)])
        assert pts.shape == (4, 2)
        np.testing.assert_allclose(pts[-1], [0.0, 0.5])

    def test_zero_offset(self, sat_relation):
        with pytest.raises(PreconditionError, match="Exterior offsets must be nonzero"):
            sample_exterior(sat_relation, (-2.0, -1.0), 3, [0.0], seed=0)

    def test_target_on_graph(self, sat_relation):
        """A target on the graph is a sampling error."""
        with pytest.raises(SamplingError, match="lie within"):
            sample_exterior(sat_relation, (-2.0, -1.0), 0, [0.3], seed=0, targets=[(0.25, 0.25)])

    def test_nothing_requested(self, sat_relation):
        """No samples and no targets give an empty array."""
        assert sample_exterior(sat_relation, (-2.0, -1.0), 0, [0.3], seed=0).shape == (0, 2)
