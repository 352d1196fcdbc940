"""
Tests for synthetic data generation.
"""

import itertools
import unittest

import numpy as np
from numpy.testing import assert_allclose, assert_array_equal

from rls_nystrom.core.exceptions import ArgumentError
from rls_nystrom.core.kernels import KernelSpec
from rls_nystrom.core.oracle import DenseKernel, exact_deff, exact_ridge_scores, lambda_for_k
from rls_nystrom.data.synthetic import (
    ClusterSpec,
    clustered_gaussian,
    dominant_cluster_spec,
    random_orthogonal,
    spectrum_kernel,
)


class TestClusterSpec(unittest.TestCase):
    """Tests for cluster specification validation."""

    def test_valid_spec(self):
        """Test n and d of a small spec."""
        spec = ClusterSpec(cluster_sizes=[3, 2], centers=[[0.0, 0.0], [5.0, 5.0]], spreads=[1.0, 0.5])
        self.assertEqual((spec.n, spec.d), (5, 2))

    def test_invalid_specs(self):
        """Test length mismatches, negative values and duplicate centers."""
        invalid = [
            dict(cluster_sizes=[3], centers=[[0.0], [1.0]], spreads=[1.0]),
            dict(cluster_sizes=[-1, 2], centers=[[0.0], [1.0]], spreads=[1.0, 1.0]),
            dict(cluster_sizes=[0], centers=[[0.0]], spreads=[1.0]),
            dict(cluster_sizes=[2], centers=[[0.0]], spreads=[-0.1]),
            dict(cluster_sizes=[1, 1], centers=[[0.0], [0.0]], spreads=[1.0, 1.0]),
            dict(cluster_sizes=[1, 1], centers=[[0.0], [1.0, 2.0]], spreads=[1.0, 1.0]),
        ]
        for kwargs in invalid:
            with self.assertRaises(ValueError, msg=str(kwargs)):
                ClusterSpec(**kwargs)


class TestClusteredGaussian(unittest.TestCase):
    """Tests for clustered point clouds."""

    def test_zero_spread(self):
        """Test that spread 0 puts every point on its center."""
        spec = ClusterSpec(cluster_sizes=[2, 3], centers=[[1.0, 2.0], [-4.0, 0.5]], spreads=[0.0, 0.0])
        data = clustered_gaussian(spec, 1)
        assert_array_equal(data.features, [[1.0, 2.0]] * 2 + [[-4.0, 0.5]] * 3)
        assert_array_equal(data.labels, [0, 0, 1, 1, 1])

    def test_deterministic(self):
        """Test that the seed fixes the output."""
        spec = dominant_cluster_spec(200, seed=3)
        assert_array_equal(clustered_gaussian(spec, 9).features, clustered_gaussian(spec, 9).features)
        self.assertFalse(np.array_equal(clustered_gaussian(spec, 9).features,
                                        clustered_gaussian(spec, 10).features))


class TestDominantCluster(unittest.TestCase):
    """Tests for the one-large-many-small layout."""

    @classmethod
    def setUpClass(cls):
        cls.spec = dominant_cluster_spec(1000, seed=0)
        cls.data = clustered_gaussian(cls.spec, 0)
        cls.K = DenseKernel.from_data(KernelSpec.gaussian(1.0), cls.data)

    def test_sizes(self):
        """Test 9n/10 dominant points and equal small clusters."""
        self.assertEqual(self.spec.cluster_sizes, [900] + [10] * 10)
        self.assertEqual(self.spec.n, 1000)

    def test_uneven_remainder(self):
        """Test that sizes always add up to n."""
        spec = dominant_cluster_spec(123, d=3, small_clusters=4, seed=1)
        self.assertEqual(spec.n, 123)
        self.assertEqual(spec.d, 3)
        self.assertLessEqual(max(spec.cluster_sizes[1:]) - min(spec.cluster_sizes[1:]), 1)

    def test_separation(self):
        """Test that centers are at least ten kernel bandwidths apart."""
        centers = np.asarray(self.spec.centers)
        for a, b in itertools.combinations(range(len(centers)), 2):
            self.assertGreaterEqual(np.linalg.norm(centers[a] - centers[b]), 10.0 - 1e-12)

    def test_separation_ignores_spreads(self):
        """Test that the spreads do not move the centers."""
        wide = dominant_cluster_spec(1000, seed=0, dominant_spread=3.0, small_spread=0.01)
        self.assertEqual(wide.centers, self.spec.centers)
        self.assertEqual(wide.spreads, [3.0] + [0.01] * 10)

    def test_dominant_cluster_is_nearly_low_rank(self):
        """Test that the large cluster's kernel block is dominated by one eigenvalue."""
        dominant = self.data.labels == 0
        eigenvalues = np.linalg.eigvalsh(self.K.K[np.ix_(dominant, dominant)])[::-1]
        self.assertLess(eigenvalues[1] / eigenvalues[0], 0.01)

    def test_too_few_points(self):
        """Test n smaller than the number of clusters."""
        with self.assertRaises(ArgumentError):
            dominant_cluster_spec(10)

    def test_effective_dimension_is_small(self):
        """Test deff(1) < n / 10."""
        self.assertLess(exact_deff(self.K, 1.0), 100.0)

    def test_small_clusters_have_larger_scores(self):
        """Test that outlying clusters carry more leverage per point."""
        scores = exact_ridge_scores(self.K, lambda_for_k(self.K, 20))
        labels = self.data.labels
        self.assertGreater(scores[labels > 0].mean(), scores[labels == 0].mean())


class TestSpectrumKernel(unittest.TestCase):
    """Tests for kernels with a prescribed spectrum."""

    def test_recovers_spectrum(self):
        """Test that eigenvalues come back in order."""
        values = [5.0, 3.0, 1.0, 0.5, 0.0]
        K = spectrum_kernel(values, 2)
        assert_allclose(K.eigenvalues, values, atol=1e-12)

    def test_single_value(self):
        """Test n = 1."""
        assert_allclose(spectrum_kernel([2.0], 0).K, [[2.0]])

    def test_invalid_spectra(self):
        """Test negative, unsorted and empty input."""
        for values in ([1.0, -1.0], [1.0, 2.0], []):
            with self.assertRaises(ArgumentError):
                spectrum_kernel(values, 0)

    def test_random_orthogonal(self):
        """Test Q^T Q = I and seed reproducibility."""
        Q = random_orthogonal(6, 4)
        assert_allclose(Q.T @ Q, np.eye(6), atol=1e-12)
        assert_array_equal(Q, random_orthogonal(6, 4))


if __name__ == '__main__':
    unittest.main()
