"""
Tests for Nystrom factors, the feature map, spectral error estimation and the
model container.
"""

import os
import shutil
import struct
import tempfile
import unittest

import numpy as np
from numpy.testing import assert_allclose, assert_array_equal

from rls_nystrom.baselines.uniform import uniform_sample
from rls_nystrom.core.container import MAGIC, read_container, write_container
from rls_nystrom.core.exceptions import ArgumentError, DataFormatError
from rls_nystrom.core.kernels import EvalCounter, KernelSpec, gram_matrix
from rls_nystrom.core.nystrom import (
    NystromFactors,
    NystromSettings,
    approx_matvec,
    build_factors,
    estimate_spectral_error,
    feature_map,
    subset_indices,
)
from rls_nystrom.core.oracle import DenseKernel, exact_spectral_error, min_difference_eigenvalue
from rls_nystrom.core.sampling import LandmarkSample
from rls_nystrom.data.synthetic import clustered_gaussian, dominant_cluster_spec
from rls_nystrom.utils.rng import make_rng

GAUSSIAN = KernelSpec.gaussian(1.0)
LINEAR = KernelSpec.linear()


def landmarks(indices) -> LandmarkSample:
    indices = np.asarray(indices)
    return LandmarkSample(indices, np.ones(indices.size), np.ones(indices.size))


class TestBuildFactors(unittest.TestCase):
    """Tests for building K~ from a landmark sample."""

    def setUp(self):
        """Set up test fixtures."""
        self.X = make_rng(0).standard_normal((40, 3))
        self.K = DenseKernel(gram_matrix(GAUSSIAN, self.X))

    def test_full_sample_reproduces_kernel(self):
        """Test K~ = K when every point is a landmark."""
        factors = build_factors(GAUSSIAN, self.X, LandmarkSample.identity(40), EvalCounter())
        self.assertLessEqual(exact_spectral_error(self.K, factors), 1e-8 * self.K.spectral_norm)

    def test_single_landmark(self):
        """Test a rank-one approximation dominated on the diagonal."""
        factors = build_factors(GAUSSIAN, self.X, landmarks([4]), EvalCounter())
        approx = factors.dense()
        self.assertEqual(factors.rank, 1)
        self.assertEqual(np.linalg.matrix_rank(approx, tol=1e-10), 1)
        self.assertTrue(np.all(np.diag(approx) <= np.diag(self.K.K) + 1e-12))

    def test_orthonormal_projection(self):
        """Test K~ = diag(1, 1, 0) for orthonormal points and landmarks [0, 1]."""
        factors = build_factors(LINEAR, np.eye(3), landmarks([0, 1]), EvalCounter())
        assert_allclose(factors.dense(), np.diag([1.0, 1.0, 0.0]), atol=1e-12)

    def test_counts_n_times_s(self):
        """Test the exact evaluation count of a build."""
        counter = EvalCounter()
        build_factors(GAUSSIAN, self.X, landmarks([1, 2, 30]), counter)
        self.assertEqual(counter.count, 40 * 3)

    def test_dominated_by_kernel(self):
        """Test K~ <= K for uniform samples."""
        for seed in range(3):
            factors = build_factors(GAUSSIAN, self.X, uniform_sample(40, 10, seed), EvalCounter())
            self.assertGreaterEqual(min_difference_eigenvalue(self.K, factors), -1e-8 * self.K.spectral_norm)

    def test_eigenvalue_monotonicity(self):
        """Test sigma_i(K~) <= sigma_i(K)."""
        factors = build_factors(GAUSSIAN, self.X, uniform_sample(40, 12, 3), EvalCounter())
        approx = np.linalg.eigvalsh(factors.dense())[::-1]
        self.assertTrue(np.all(approx <= self.K.eigenvalues + 1e-8))

    def test_rebuild_is_bit_stable(self):
        """Test that rebuilding from the same sample gives identical factors."""
        sample = uniform_sample(40, 8, 1)
        first = build_factors(GAUSSIAN, self.X, sample, EvalCounter())
        second = build_factors(GAUSSIAN, self.X, sample, EvalCounter())
        assert_array_equal(first.Winv, second.Winv)
        assert_array_equal(first.C, second.C)

    def test_empty_sample(self):
        """Test that an empty sample is rejected."""
        with self.assertRaises(ArgumentError):
            build_factors(GAUSSIAN, self.X, landmarks([]), EvalCounter())


class TestMatvecAndFeatures(unittest.TestCase):
    """Tests for implicit products and the feature map."""

    def setUp(self):
        """Set up test fixtures."""
        self.X = make_rng(1).standard_normal((30, 2))
        self.K = gram_matrix(GAUSSIAN, self.X)
        self.full = build_factors(GAUSSIAN, self.X, LandmarkSample.identity(30), EvalCounter())
        self.partial = build_factors(GAUSSIAN, self.X, landmarks([0, 5, 11, 17]), EvalCounter())

    def test_zero_vector(self):
        """Test K~ 0 = 0."""
        assert_array_equal(approx_matvec(self.partial, np.zeros(30)), np.zeros(30))

    def test_full_sample_matvec(self):
        """Test K~ v = K v for the full sample."""
        v = make_rng(2).standard_normal(30)
        expected = self.K @ v
        assert_allclose(approx_matvec(self.full, v), expected, rtol=0, atol=1e-8 * np.linalg.norm(expected))

    def test_unit_vectors_give_symmetric_columns(self):
        """Test that K~ e_i is column i and equals row i."""
        approx = self.partial.dense()
        for i in (0, 7, 29):
            e = np.zeros(30)
            e[i] = 1.0
            column = approx_matvec(self.partial, e)
            assert_allclose(column, approx[:, i], atol=1e-10)
            assert_allclose(column, approx[i, :], atol=1e-10)

    def test_length_mismatch(self):
        """Test vector length validation."""
        with self.assertRaises(ArgumentError):
            approx_matvec(self.partial, np.ones(29))

    def test_feature_map_factorizes(self):
        """Test F F^T = K~ and F F^T = K for the full sample."""
        F = feature_map(self.partial)
        approx = self.partial.C @ self.partial.Winv @ self.partial.C.T
        assert_allclose(F @ F.T, approx, atol=1e-8 * np.abs(approx).max())
        F_full = feature_map(self.full)
        assert_allclose(F_full @ F_full.T, self.K, atol=1e-8)

    def test_rank_deficient_landmarks(self):
        """Test that F has only rank columns when S^T K S is singular."""
        X = make_rng(3).standard_normal((20, 2))
        X[:3] = [[1.0, 0.0], [1.0, 0.0], [0.0, 1.0]]
        factors = build_factors(LINEAR, X, landmarks([0, 1, 2]), EvalCounter())
        F = feature_map(factors)
        self.assertEqual(factors.rank, 2)
        self.assertEqual(F.shape, (20, 2))

    def test_single_landmark_shape(self):
        """Test that one landmark gives an n x 1 feature map."""
        factors = build_factors(GAUSSIAN, self.X, landmarks([3]), EvalCounter())
        self.assertEqual(feature_map(factors).shape, (30, 1))


class TestSpectralErrorEstimate(unittest.TestCase):
    """Tests for the power-iteration error estimate."""

    def test_full_sample_is_near_zero(self):
        """Test an almost exact approximation."""
        X = make_rng(4).standard_normal((60, 3))
        factors = build_factors(GAUSSIAN, X, LandmarkSample.identity(60), EvalCounter())
        error = estimate_spectral_error(GAUSSIAN, X, factors, 60, 50, seed=0)
        self.assertLessEqual(error, 1e-6 * 60)

    def test_rank_one_kernel(self):
        """Test zero error for identical points with one landmark."""
        X = np.tile([1.0, 2.0], (25, 1))
        factors = build_factors(LINEAR, X, landmarks([0]), EvalCounter())
        self.assertLessEqual(estimate_spectral_error(LINEAR, X, factors, 25, 20, seed=1), 1e-10)

    def test_matches_dense_oracle(self):
        """Test agreement with the dense eigensolve within 1%."""
        data = clustered_gaussian(dominant_cluster_spec(300, seed=2), 2)
        K = DenseKernel.from_data(GAUSSIAN, data)
        for seed in range(3):
            factors = build_factors(GAUSSIAN, data, uniform_sample(300, 30, seed), EvalCounter())
            exact = exact_spectral_error(K, factors)
            estimate = estimate_spectral_error(GAUSSIAN, data, factors, 300, 200, seed=seed)
            self.assertAlmostEqual(estimate / exact, 1.0, delta=0.01)

    def test_block_rows_match_cached(self):
        """Test that block-wise kernel products give the same estimate."""
        data = clustered_gaussian(dominant_cluster_spec(200, seed=3), 3)
        factors = build_factors(GAUSSIAN, data, uniform_sample(200, 20, 0), EvalCounter())
        cached = estimate_spectral_error(GAUSSIAN, data, factors, 150, 100, seed=4)
        blocked = estimate_spectral_error(GAUSSIAN, data, factors, 150, 100, seed=4,
                                          settings=NystromSettings(block_size=32))
        self.assertAlmostEqual(blocked, cached, delta=1e-5 * cached)

    def test_subset_validation(self):
        """Test subset size bounds."""
        with self.assertRaises(ArgumentError):
            subset_indices(10, 0, 0)
        with self.assertRaises(ArgumentError):
            subset_indices(10, 11, 0)
        assert_array_equal(subset_indices(5, 5, 0), np.arange(5))
        self.assertEqual(len(set(subset_indices(100, 30, 9).tolist())), 30)


class TestContainer(unittest.TestCase):
    """Tests for saving and loading artifacts."""

    def setUp(self):
        """Set up test fixtures."""
        self.temp_dir = tempfile.mkdtemp()
        self.path = os.path.join(self.temp_dir, "factors.bin")

    def tearDown(self):
        """Tear down test fixtures."""
        shutil.rmtree(self.temp_dir)

    def test_factors_save_load(self):
        """Test that saved factors load back unchanged."""
        X = make_rng(5).standard_normal((15, 2))
        factors = build_factors(KernelSpec.gaussian(0.7), X, landmarks([2, 9, 14]), EvalCounter())
        factors.save(self.path)
        loaded = NystromFactors.load(self.path)
        assert_array_equal(loaded.C, factors.C)
        assert_array_equal(loaded.Winv, factors.Winv)
        assert_array_equal(loaded.landmark_indices, factors.landmark_indices)
        self.assertEqual(loaded.rank, factors.rank)
        self.assertEqual(loaded.kernel, factors.kernel)

    def test_bad_magic(self):
        """Test that a foreign file is rejected."""
        with open(self.path, "wb") as f:
            f.write(b"NOTAMODELFILE" * 4)
        with self.assertRaises(DataFormatError):
            read_container(self.path, "nystrom")

    def test_wrong_kind(self):
        """Test that an artifact of another type is rejected."""
        write_container(self.path, "rff", {}, {"phases": np.zeros(3)})
        with self.assertRaises(DataFormatError):
            read_container(self.path, "nystrom")

    def test_unsupported_version(self):
        """Test that a newer container version is rejected."""
        with open(self.path, "wb") as f:
            f.write(struct.pack("<6sHI", MAGIC, 99, 2) + b"{}")
        with self.assertRaises(DataFormatError):
            read_container(self.path, "nystrom")

    def test_truncated_payload(self):
        """Test a file cut short inside an array."""
        write_container(self.path, "nystrom", {"n": 4}, {"C": np.ones((4, 4))})
        with open(self.path, "rb") as f:
            blob = f.read()
        with open(self.path, "wb") as f:
            f.write(blob[:-8])
        with self.assertRaises(DataFormatError):
            read_container(self.path, "nystrom")

    def test_integer_arrays(self):
        """Test that integer arrays keep their dtype."""
        write_container(self.path, "nystrom", {"note": "x"}, {"idx": np.array([3, 1, 2])})
        metadata, arrays = read_container(self.path, "nystrom")
        self.assertEqual(metadata, {"note": "x"})
        self.assertTrue(np.issubdtype(arrays["idx"].dtype, np.integer))
        assert_array_equal(arrays["idx"], [3, 1, 2])


if __name__ == '__main__':
    unittest.main()
