"""
Tests for dataset loading, writing and preprocessing.
"""

import os
import shutil
import tempfile
import unittest

import numpy as np
from numpy.testing import assert_allclose, assert_array_equal
from sklearn.preprocessing import OneHotEncoder, StandardScaler

from rls_nystrom.core.exceptions import ArgumentError, DataFormatError, DataParseError
from rls_nystrom.data.datasets import (
    Dataset,
    apply_preprocess,
    describe_dataset,
    load_csv,
    load_dataset,
    load_libsvm,
    one_vs_rest,
    preprocess,
    save_csv,
    save_libsvm,
)
from rls_nystrom.utils.rng import make_rng


class DatasetTestCase(unittest.TestCase):
    """Base class with a temporary directory."""

    def setUp(self):
        """Set up test fixtures."""
        self.temp_dir = tempfile.mkdtemp()

    def tearDown(self):
        """Tear down test fixtures."""
        shutil.rmtree(self.temp_dir)

    def write(self, name: str, text: str) -> str:
        path = os.path.join(self.temp_dir, name)
        with open(path, "w", encoding="utf-8") as f:
            f.write(text)
        return path


class TestLoadCsv(DatasetTestCase):
    """Tests for the CSV reader."""

    def test_plain_matrix(self):
        """Test a headerless numeric file."""
        data = load_csv(self.write("a.csv", "1,2\n3,4\n5,6\n"))
        self.assertEqual((data.n, data.d), (3, 2))
        self.assertIsNone(data.labels)

    def test_label_column(self):
        """Test splitting off the label column."""
        data = load_csv(self.write("a.csv", "1,2\n3,4\n5,6\n"), label_column=1)
        assert_array_equal(data.features, [[1.0], [3.0], [5.0]])
        assert_array_equal(data.labels, [2.0, 4.0, 6.0])

    def test_ragged_rows(self):
        """Test that a short row reports its row number."""
        with self.assertRaises(DataFormatError) as ctx:
            load_csv(self.write("a.csv", "1,2\n1\n"))
        self.assertEqual(ctx.exception.row, 2)

    def test_non_numeric_cell(self):
        """Test the parse error for a text cell in a numeric column."""
        with self.assertRaises(DataParseError) as ctx:
            load_csv(self.write("a.csv", "1,2\n3,x\n"))
        self.assertEqual(ctx.exception.row, 2)

    def test_header(self):
        """Test that a non-numeric first row becomes feature names."""
        data = load_csv(self.write("a.csv", "height,weight\n1,2\n"))
        self.assertEqual(data.feature_names, ["height", "weight"])
        self.assertEqual(data.n, 1)

    def test_categorical_codes(self):
        """Test that categorical strings become sorted integer codes."""
        data = load_csv(self.write("a.csv", "red,1\nblue,2\nred,3\n"), categorical_columns=[0])
        assert_array_equal(data.features[:, 0], [1.0, 0.0, 1.0])
        self.assertEqual(data.categories[0], ["blue", "red"])

    def test_empty_file(self):
        """Test a file without data rows."""
        with self.assertRaises(DataFormatError):
            load_csv(self.write("a.csv", "\n\n"))

    def test_csv_round_trip(self):
        """Test save_csv followed by load_csv."""
        data = Dataset(make_rng(0).standard_normal((5, 3)), np.arange(5.0))
        path = os.path.join(self.temp_dir, "out.csv")
        save_csv(data, path)
        loaded = load_csv(path, label_column=3)
        assert_array_equal(loaded.features, data.features)
        assert_array_equal(loaded.labels, data.labels)


class TestLibsvm(DatasetTestCase):
    """Tests for the LIBSVM reader and writer."""

    def test_sparse_rows(self):
        """Test densification with absent indices as zeros."""
        data = load_libsvm(self.write("a.svm", "1 1:0.5 3:2.0\n-1 2:1.0\n"))
        assert_array_equal(data.features, [[0.5, 0.0, 2.0], [0.0, 1.0, 0.0]])
        assert_array_equal(data.labels, [1.0, -1.0])

    def test_label_only_line(self):
        """Test that a line without features is an all-zero row."""
        data = load_libsvm(self.write("a.svm", "1\n"))
        self.assertEqual(data.n, 1)
        self.assertFalse(np.any(data.features))

    def test_decreasing_index(self):
        """Test the ordering rule."""
        with self.assertRaises(DataFormatError) as ctx:
            load_libsvm(self.write("a.svm", "1 1:1\n1 3:1 2:1\n"))
        self.assertEqual(ctx.exception.row, 2)

    def test_unparsable_value(self):
        """Test a malformed value token."""
        with self.assertRaises(DataParseError):
            load_libsvm(self.write("a.svm", "1 1:abc\n"))

    def test_reload_is_identity(self):
        """Test write then load reproduces the dense matrix exactly."""
        features = make_rng(1).standard_normal((20, 4))
        features[::3, 1] = 0.0
        features[5] = 0.0
        data = Dataset(features, make_rng(2).integers(0, 3, 20))
        path = os.path.join(self.temp_dir, "out.svm")
        save_libsvm(data, path)
        loaded = load_libsvm(path)
        assert_array_equal(loaded.features, data.features)
        assert_array_equal(loaded.labels, data.labels)

    def test_reload_keeps_trailing_zero_column(self):
        """Test that an explicit zero at the largest index survives a write and reload."""
        data = load_libsvm(self.write("a.svm", "1 1:0.5 3:0\n-1 2:1.0\n"))
        self.assertEqual(data.features.shape, (2, 3))
        path = os.path.join(self.temp_dir, "out.svm")
        save_libsvm(data, path)
        loaded = load_libsvm(path)
        self.assertEqual(loaded.features.shape, (2, 3))
        assert_array_equal(loaded.features, data.features)
        assert_array_equal(loaded.labels, data.labels)

    def test_load_dataset_by_extension(self):
        """Test reader selection from the file name."""
        csv_path = self.write("a.csv", "1,2\n")
        svm_path = self.write("a.svm", "1 2:1\n")
        self.assertEqual(load_dataset(csv_path).d, 2)
        self.assertEqual(load_dataset(svm_path).d, 2)
        with self.assertRaises(ArgumentError):
            load_dataset(csv_path, fmt="parquet")


class TestPreprocess(unittest.TestCase):
    """Tests for categorical expansion and standardization."""

    def test_indicator_expansion(self):
        """Test one indicator column per distinct value."""
        result, report = preprocess(Dataset(np.array([[1.0], [1.0], [2.0]])), {0})
        self.assertEqual(report.expanded_categoricals, [(0, 2)])
        restored = result.features * report.scales + report.means
        assert_allclose(restored, [[1.0, 0.0], [1.0, 0.0], [0.0, 1.0]], atol=1e-12)

    def test_numeric_column(self):
        """Test centering and population-variance scaling of [0, 2]."""
        result, report = preprocess(Dataset(np.array([[0.0], [2.0]])))
        assert_allclose(result.features[:, 0], [-1.0, 1.0])
        self.assertEqual(report.variance_convention, "population")

    def test_constant_column(self):
        """Test that a constant column centers to zero with scale 1."""
        result, report = preprocess(Dataset(np.array([[5.0], [5.0], [5.0]])))
        assert_array_equal(result.features[:, 0], [0.0, 0.0, 0.0])
        self.assertEqual(report.scales[0], 1.0)

    def test_moments_and_idempotence(self):
        """Test zero means, unit variances and idempotence."""
        features = make_rng(3).standard_normal((200, 4)) * [1.0, 10.0, 0.1, 3.0] + [5.0, -2.0, 0.0, 7.0]
        features[:, 3] = np.round(features[:, 3]) % 3
        result, _ = preprocess(Dataset(features), {3})
        self.assertLessEqual(np.max(np.abs(result.features.mean(axis=0))), 1e-10)
        assert_allclose(result.features.var(axis=0), 1.0, atol=1e-8)
        again, _ = preprocess(result)
        assert_allclose(again.features, result.features, atol=1e-8)

    def test_apply_preprocess_matches_training(self):
        """Test that the recorded report reproduces the training transform."""
        features = np.column_stack([make_rng(4).standard_normal(30), np.arange(30) % 4])
        data = Dataset(features)
        result, report = preprocess(data, {1})
        assert_allclose(apply_preprocess(data, report).features, result.features, atol=1e-12)

    def test_report_holds_fitted_estimators(self):
        """Test the scaler and encoder recorded in the report."""
        features = np.column_stack([[0.0, 2.0, 4.0], [2.0, 0.0, 2.0]])
        _, report = preprocess(Dataset(features), {1})
        self.assertIsInstance(report.scaler, StandardScaler)
        self.assertIsInstance(report.encoder, OneHotEncoder)
        self.assertEqual(report.category_values, {1: [0.0, 2.0]})
        assert_allclose(report.means, [2.0, 1.0 / 3.0, 2.0 / 3.0])
        self.assertEqual(report.to_dict()["expanded_categoricals"], [[1, 2]])

    def test_unseen_category_is_all_zero(self):
        """Test that a category absent from the training data expands to zero indicators."""
        train = Dataset(np.array([[0.0], [1.0], [1.0], [0.0]]))
        _, report = preprocess(train, {0})
        test = apply_preprocess(Dataset(np.array([[7.0]])), report)
        assert_allclose(test.features * report.scales + report.means, [[0.0, 0.0]], atol=1e-12)

    def test_apply_preprocess_column_mismatch(self):
        """Test data with a different column count than the report."""
        _, report = preprocess(Dataset(np.ones((3, 2))))
        with self.assertRaises(ArgumentError):
            apply_preprocess(Dataset(np.ones((3, 3))), report)

    def test_out_of_range_categorical(self):
        """Test categorical index validation."""
        with self.assertRaises(ArgumentError):
            preprocess(Dataset(np.ones((2, 2))), {5})


class TestDatasetHelpers(unittest.TestCase):
    """Tests for the Dataset type and small helpers."""

    def test_invalid_datasets(self):
        """Test non-finite entries and label length mismatch."""
        with self.assertRaises(ArgumentError):
            Dataset(np.array([[1.0, np.nan]]))
        with self.assertRaises(ArgumentError):
            Dataset(np.ones((3, 2)), np.ones(2))

    def test_subset(self):
        """Test row selection carrying labels."""
        data = Dataset(np.arange(6.0).reshape(3, 2), np.array([0.0, 1.0, 2.0]))
        part = data.subset([2, 0])
        assert_array_equal(part.labels, [2.0, 0.0])
        assert_array_equal(part.features[0], [4.0, 5.0])

    def test_one_vs_rest(self):
        """Test +/-1 labels for a positive class."""
        assert_array_equal(one_vs_rest(np.array([1.0, 2.0, 3.0, 2.0]), 2.0), [-1.0, 1.0, -1.0, 1.0])

    def test_registry(self):
        """Test dataset metadata lookup."""
        self.assertEqual(describe_dataset("Covertype").d, 54)
        self.assertEqual(describe_dataset("cod-rna").n, 331152)
        with self.assertRaises(ArgumentError):
            describe_dataset("mnist")


if __name__ == '__main__':
    unittest.main()
