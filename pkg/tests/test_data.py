import numpy as np
import pytest

from stabsel.data import (
    CoefficientPath,
    Dataset,
    LambdaGrid,
    SelectionSet,
    load_csv,
    normalize_columns,
)
from stabsel.errors import ConfigError, DataError


class TestNormalize:
    def test_3_4_5_column(self):
        ds = normalize_columns(np.array([[3.0], [4.0]]))
        assert ds.X[:, 0] == pytest.approx([0.6, 0.8])
        assert ds.scales[0] == pytest.approx(5.0)

    def test_unit_column_unchanged(self):
        X = np.array([[1.0, 0.0], [0.0, 1.0]])
        ds = normalize_columns(X)
        assert np.allclose(ds.X, X)

    def test_random_matrix_unit_norms(self):
        rng = np.random.default_rng(0)
        ds = normalize_columns(rng.standard_normal((5, 3)))
        assert np.abs(np.linalg.norm(ds.X, axis=0) - 1.0).max() <= 1e-10

    def test_idempotent(self):
        rng = np.random.default_rng(1)
        y = rng.standard_normal(6)
        once = normalize_columns(rng.standard_normal((6, 4)), y)
        twice = normalize_columns(once)
        assert np.allclose(once.X, twice.X, atol=1e-12)
        assert np.allclose(once.scales, twice.scales, atol=1e-12)
        assert np.allclose(once.y, twice.y, atol=1e-12)

    def test_response_centered(self):
        rng = np.random.default_rng(2)
        ds = normalize_columns(rng.standard_normal((10, 2)), rng.standard_normal(10) + 7.0)
        assert abs(ds.y.mean()) < 1e-12

    def test_zero_column_rejected(self):
        X = np.ones((4, 3))
        X[:, 1] = 0.0
        with pytest.raises(DataError, match="column 1"):
            normalize_columns(X)

    def test_nonfinite_rejected(self):
        X = np.ones((3, 2))
        X[1, 0] = np.nan
        with pytest.raises(DataError):
            normalize_columns(X)


class TestDataset:
    def test_shape_validation(self):
        with pytest.raises(DataError):
            Dataset(np.ones((1, 3)))
        with pytest.raises(DataError):
            Dataset(np.ones((3, 2)), y=np.ones(2))

    def test_default_names(self):
        ds = Dataset(np.ones((2, 3)))
        assert ds.names == ("x1", "x2", "x3")

    def test_restrict_rows_keeps_scaling(self):
        rng = np.random.default_rng(3)
        ds = normalize_columns(rng.standard_normal((8, 2)), rng.standard_normal(8))
        sub = ds.restrict_rows(np.array([0, 2, 4]))
        assert sub.n == 3
        assert np.array_equal(sub.scales, ds.scales)
        assert np.allclose(sub.X, ds.X[[0, 2, 4]])

    def test_immutable(self):
        ds = Dataset(np.ones((2, 2)))
        with pytest.raises(ValueError):
            ds.X[0, 0] = 5.0


class TestLoadCsv:
    def test_basic(self, tmp_path):
        f = tmp_path / "d.csv"
        f.write_text("a,b\n1,2\n3,4\n5,6\n")
        ds = load_csv(f)
        assert (ds.n, ds.p) == (3, 2)
        assert ds.names == ("a", "b")
        assert ds.y is None

    def test_response_by_name(self, tmp_path):
        f = tmp_path / "d.csv"
        f.write_text("a,b,y\n1,2,9\n3,4,8\n5,6,7\n")
        ds = load_csv(f, response_column="y")
        assert (ds.n, ds.p) == (3, 2)
        assert ds.y.tolist() == [9.0, 8.0, 7.0]

    def test_response_by_index(self, tmp_path):
        f = tmp_path / "d.csv"
        f.write_text("1,2\n3,4\n", )
        ds = load_csv(f, has_header=False, response_column=0)
        assert ds.y.tolist() == [1.0, 3.0]

    def test_text_cell_names_row(self, tmp_path):
        f = tmp_path / "d.csv"
        f.write_text("a,b\n1,2\n3,oops\n5,6\n")
        with pytest.raises(DataError, match="row 2"):
            load_csv(f)

    def test_ragged_row(self, tmp_path):
        f = tmp_path / "d.csv"
        f.write_text("a,b\n1,2\n3\n")
        with pytest.raises(DataError, match="ragged"):
            load_csv(f)

    def test_missing_response(self, tmp_path):
        f = tmp_path / "d.csv"
        f.write_text("a,b\n1,2\n3,4\n")
        with pytest.raises(DataError, match="'z'"):
            load_csv(f, response_column="z")


class TestLambdaGrid:
    def test_validation(self):
        with pytest.raises(ConfigError):
            LambdaGrid(np.array([1.0, 2.0]))
        with pytest.raises(ConfigError):
            LambdaGrid(np.array([1.0, 0.0]))

    def test_geometric(self):
        g = LambdaGrid.geometric(10.0, num=5, min_ratio=0.1)
        assert g.values[0] == pytest.approx(10.0)
        assert g.values[-1] == pytest.approx(1.0)
        assert len(g) == 5

    def test_for_data_null_boundary(self):
        rng = np.random.default_rng(4)
        ds = normalize_columns(rng.standard_normal((10, 3)), rng.standard_normal(10))
        g = LambdaGrid.for_data(ds)
        assert g.values[0] == pytest.approx(2.0 * np.abs(ds.X.T @ ds.y).max())

    def test_window(self):
        g = LambdaGrid(np.array([4.0, 2.0, 1.0]))
        assert g.window(None) == 2
        assert g.window(2.0) == 1
        assert g.window(1.5) == 1
        with pytest.raises(ConfigError):
            g.window(5.0)

    def test_steps(self):
        g = LambdaGrid.steps(4)
        assert g.values.tolist() == [4.0, 3.0, 2.0, 1.0]


class TestSelectionSet:
    def test_bounds(self):
        with pytest.raises(ConfigError):
            SelectionSet(frozenset([5]), 3)

    def test_indicator_roundtrip(self):
        mask = np.array([True, False, True, False])
        s = SelectionSet.from_indicator(mask)
        assert s.sorted() == [0, 2]
        assert np.array_equal(s.indicator(), mask)
        assert 2 in s and 1 not in s


class TestCoefficientPath:
    def test_support(self):
        grid = LambdaGrid(np.array([2.0, 1.0]))
        path = CoefficientPath(np.array([[0.0, 1.0], [2.0, 0.0]]), grid)
        assert path.support(0).sorted() == [1]
        assert path.support(1).sorted() == [0]
        assert path.support_matrix().tolist() == [[False, True], [True, False]]

    def test_shape_checked(self):
        with pytest.raises(ConfigError):
            CoefficientPath(np.zeros((2, 3)), LambdaGrid(np.array([1.0])))
