import numpy as np
import pytest

from api.exceptions import (
    DataLoadException,
    DegenerateDataException,
    DimensionMismatchException,
    ValidationException,
)
from data.dataset import (
    SPLIT_TEST,
    SPLIT_TRAIN,
    Dataset,
    load_matrix,
    rescale_to_unit_interval,
    split,
)


def write_csv(path, rows):
    path.write_text("\n".join(",".join(str(v) for v in row) for row in rows) + "\n")
    return str(path)


def test_load_csv(tmp_path):
    path = write_csv(tmp_path / "x.csv", [[1, 2, 3], [4, 5, 6]])
    dataset = load_matrix(path)
    np.testing.assert_array_equal(dataset.values, [[1, 2, 3], [4, 5, 6]])
    assert (dataset.N, dataset.D) == (2, 3)


def test_load_csv_with_header(tmp_path):
    path = tmp_path / "x.csv"
    path.write_text("a,b\n1,2\n3,4\n")
    np.testing.assert_array_equal(load_matrix(str(path), header=True).values, [[1, 2], [3, 4]])


def test_ragged_csv(tmp_path):
    path = tmp_path / "x.csv"
    path.write_text("1,2,3\n4,5\n")
    with pytest.raises(DataLoadException):
        load_matrix(str(path))


def test_missing_and_empty_files(tmp_path):
    with pytest.raises(DataLoadException) as info:
        load_matrix(str(tmp_path / "nope.csv"))
    assert info.value.status_code == 404
    empty = tmp_path / "empty.csv"
    empty.write_text("")
    with pytest.raises(DataLoadException):
        load_matrix(str(empty))


def test_load_raw_frames(tmp_path):
    frames = np.arange(2 * 12, dtype=np.uint8)
    path = tmp_path / "frames.raw"
    frames.tofile(path)
    dataset = load_matrix(str(path), "raw-u8", width=3, height=4)
    assert dataset.values.shape == (2, 12)
    assert dataset.image_shape == (3, 4)
    np.testing.assert_array_equal(dataset.values[1], np.arange(12, 24))
    with pytest.raises(DataLoadException):
        load_matrix(str(path), "raw-u8", width=5, height=5)
    with pytest.raises(ValidationException):
        load_matrix(str(path), "raw-u8")


def test_image_shape_must_match():
    with pytest.raises(DimensionMismatchException):
        Dataset(np.zeros((2, 6)), image_shape=(2, 2))


def test_rescale_round_trip():
    values = np.random.default_rng(0).uniform(0, 255, size=(30, 8))
    rescaled, params = rescale_to_unit_interval(Dataset(values))
    assert rescaled.values.min() == pytest.approx(-1.0)
    assert rescaled.values.max() == pytest.approx(1.0)
    np.testing.assert_allclose(params.invert(rescaled.values), values, atol=1e-12)


def test_rescale_constant_data():
    with pytest.raises(DegenerateDataException):
        rescale_to_unit_interval(Dataset(np.full((4, 3), 7.0)))


def test_split_partitions_rows():
    dataset = split(Dataset(np.arange(50.0).reshape(25, 2)), 0.8, seed=3)
    assert dataset.train.shape[0] == 20
    assert dataset.test.shape[0] == 5
    rows = np.vstack([dataset.train, dataset.test])
    np.testing.assert_array_equal(np.sort(rows[:, 0]), np.arange(0.0, 50.0, 2.0))
    assert set(dataset.split_tags) == {SPLIT_TRAIN, SPLIT_TEST}


def test_split_is_seeded():
    dataset = Dataset(np.arange(40.0).reshape(20, 2))
    a = split(dataset, 0.5, seed=1)
    b = split(dataset, 0.5, seed=1)
    c = split(dataset, 0.5, seed=2)
    np.testing.assert_array_equal(a.split_tags, b.split_tags)
    assert not np.array_equal(a.split_tags, c.split_tags)
    with pytest.raises(ValidationException):
        split(dataset, 1.0)


def test_rescale_byte_range():
    values = np.array([[0.0, 127.5, 255.0], [255.0, 0.0, 127.5]])
    rescaled, _ = rescale_to_unit_interval(Dataset(values))
    np.testing.assert_allclose(rescaled.values, [[-1.0, 0.0, 1.0], [1.0, -1.0, 0.0]], atol=1e-12)


def test_split_full_frame_count():
    dataset = split(Dataset(np.zeros((1965, 2))), 0.8, seed=0)
    assert dataset.train.shape[0] == 1572
    assert dataset.test.shape[0] == 393
