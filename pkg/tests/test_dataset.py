import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from repsel.dataset import DataError, Dataset, fit_standardizer, load_csv, split_by_class
from repsel.evalharness import generate_toy, toy_label

from .conftest import write_csv


def test_load_small_file(tmp_path):
    p = write_csv(tmp_path / "d.csv", ["a", "b", "y"], [[1, 2, 0], [3, 4.5, 1], [5, 6, 1]])
    data = load_csv(p, "y")
    assert len(data) == 3 and data.n_features == 2
    assert data.column_names == ("a", "b")
    assert data.row_ids.tolist() == [0, 1, 2]
    assert data.labels.tolist() == [0, 1, 1]
    np.testing.assert_array_equal(data.features, [[1, 2], [3, 4.5], [5, 6]])


def test_label_column_anywhere_and_text_labels(tmp_path):
    p = write_csv(tmp_path / "d.csv", ["cls", "a"], [["neg", 1], ["pos", 2], ["neg", 3]])
    data = load_csv(p, "cls")
    assert data.column_names == ("a",)
    assert data.labels.tolist() == ["neg", "pos", "neg"]


def test_single_class_loads(tmp_path):
    p = write_csv(tmp_path / "d.csv", ["a", "y"], [[1, 0], [2, 0], [3, 0]])
    data = load_csv(p, "y")
    assert data.classes == [0]


@pytest.mark.parametrize("bad", ["NaN", "abc", "inf", ""])
def test_non_numeric_cell_names_row_and_column(tmp_path, bad):
    p = write_csv(tmp_path / "d.csv", ["a", "b", "y"], [[1, 2, 0], [3, bad, 1]])
    with pytest.raises(DataError, match=r"row 2.*'b'"):
        load_csv(p, "y")


def test_load_errors(tmp_path):
    with pytest.raises(DataError, match="no such file"):
        load_csv(tmp_path / "missing.csv", "y")
    empty = tmp_path / "empty.csv"
    empty.write_text("")
    with pytest.raises(DataError, match="header"):
        load_csv(empty, "y")
    dup = write_csv(tmp_path / "dup.csv", ["a", "a", "y"], [[1, 2, 0], [3, 4, 1]])
    with pytest.raises(DataError, match="duplicate"):
        load_csv(dup, "y")
    nolabel = write_csv(tmp_path / "nl.csv", ["a", "b"], [[1, 2], [3, 4]])
    with pytest.raises(DataError, match="label column"):
        load_csv(nolabel, "y")
    one = write_csv(tmp_path / "one.csv", ["a", "y"], [[1, 0]])
    with pytest.raises(DataError, match="at least 2"):
        load_csv(one, "y")
    ragged = write_csv(tmp_path / "r.csv", ["a", "y"], [[1, 0], [2]])
    with pytest.raises(DataError, match="cells"):
        load_csv(ragged, "y")


def test_dataset_is_read_only(toy):
    with pytest.raises(ValueError):
        toy.features[0, 0] = 1.0
    with pytest.raises(AttributeError):
        toy.labels = None


@pytest.mark.parametrize("column,mean,std", [
    ([0.0, 2.0], 1.0, math.sqrt(2.0)),
    ([5.0, 5.0, 5.0], 5.0, 1.0),
    ([-10.0, 0.0, 10.0], 0.0, 10.0),
])
def test_fit_standardizer_examples(column, mean, std):
    s = fit_standardizer(Dataset.from_arrays(np.array(column)[:, None], [0] * len(column)))
    assert s.means[0] == pytest.approx(mean, abs=1e-15)
    assert s.stddevs[0] == pytest.approx(std, rel=1e-15)


def test_constant_column_is_only_centered():
    data = Dataset.from_arrays([[5.0, 1.0], [5.0, 2.0], [5.0, 4.0]], [0, 1, 0])
    z = fit_standardizer(data).transform(data.features)
    np.testing.assert_array_equal(z[:, 0], 0.0)


finite = st.floats(min_value=-1e6, max_value=1e6, allow_nan=False, allow_infinity=False)


@settings(max_examples=60, deadline=None)
@given(arrays(np.float64, st.tuples(st.integers(2, 30), st.integers(1, 5)), elements=finite))
def test_standardize_round_trip(x):
    data = Dataset.from_arrays(x, np.zeros(len(x), dtype=int))
    s = fit_standardizer(data)
    back = s.inverse_transform(s.transform(x))
    scale = np.maximum(np.abs(x), s.stddevs)
    assert np.all(np.abs(back - x) <= 1e-12 * scale + 1e-300)


@settings(max_examples=60, deadline=None)
@given(arrays(np.float64, st.tuples(st.integers(3, 30), st.integers(1, 5)),
              elements=st.floats(-1e3, 1e3, allow_nan=False)))
def test_standardized_columns_have_zero_mean_unit_std(x):
    data = Dataset.from_arrays(x, np.zeros(len(x), dtype=int))
    z = fit_standardizer(data).transform(x)
    for j in range(x.shape[1]):
        if np.ptp(x[:, j]) > 1e-6 * max(1.0, np.abs(x[:, j]).max()):
            assert abs(z[:, j].mean()) < 1e-10
            assert abs(z[:, j].std(ddof=1) - 1.0) < 1e-10


def test_split_by_class_sizes():
    labels = np.array([0] * 70 + [1] * 30)
    data = Dataset.from_arrays(np.arange(100.0), labels)
    parts = split_by_class(data)
    assert {c: len(p) for c, p in parts.items()} == {0: 70, 1: 30}
    assert parts[1].row_ids.tolist() == list(range(70, 100))


def test_split_single_class():
    data = Dataset.from_arrays(np.arange(5.0), [3] * 5)
    parts = split_by_class(data)
    assert list(parts) == [3] and len(parts[3]) == 5


@pytest.mark.parametrize("seed", range(5))
def test_split_toy_partition(seed):
    data = generate_toy(100, seed)
    # labels recounted from an independent evaluation of the indicator
    x1, x2 = data.features[:, 0], data.features[:, 1]
    expected = sum(1 for a, b in zip(x1, x2) if a * a - a * b - a - 3 > 0)
    parts = split_by_class(data)
    assert len(parts[1]) == expected
    assert sum(len(p) for p in parts.values()) == 100
    ids = [set(p.row_ids.tolist()) for p in parts.values()]
    assert not ids[0] & ids[1]
    assert ids[0] | ids[1] == set(range(100))


def test_to_csv_round_trip(tmp_path, toy):
    path = tmp_path / "toy.csv"
    toy.to_csv(path)
    back = load_csv(path, "y")
    np.testing.assert_array_equal(back.features, toy.features)
    np.testing.assert_array_equal(back.labels, toy.labels)


def test_subset_helpers(toy):
    sub = toy.select_ids([5, 3])
    assert sub.row_ids.tolist() == [5, 3]
    rest = toy.drop_ids([5, 3])
    assert len(rest) == 98 and 5 not in rest.row_ids
    with pytest.raises(DataError, match="unknown row_id"):
        toy.select_ids([1000])


def test_toy_label_examples():
    assert toy_label(0.0, 0.0) == 0
    assert toy_label(-3.0, 0.0) == 1
    assert toy_label(10.0, 10.0) == 0
