import numpy as np
import pytest

from api.exceptions import DataLoadException, ModelFormatException, ValidationException
from data import formats
from data.dataset import RescaleParams
from models.factor_model import fit_ppca, sample
from models.imputation import ImputationReport
from models.inference import DenoisingEncoder, Mask


def test_model_container_is_bit_exact(tmp_path, small_model):
    model, diagnostics = fit_ppca(sample(small_model, 100, seed=0), 3)
    path = str(tmp_path / "model.npz")
    formats.save_model(path, model, diagnostics, RescaleParams(0.0, 255.0), (2, 4))

    loaded, loaded_diag, rescale, image_shape = formats.load_model(path)
    np.testing.assert_array_equal(loaded.loading, model.loading)
    np.testing.assert_array_equal(loaded.mean, model.mean)
    np.testing.assert_array_equal(loaded.noise_diag, model.noise_diag)
    np.testing.assert_array_equal(loaded_diag.eigenvalues, diagnostics.eigenvalues)
    assert loaded_diag.sigma2 == diagnostics.sigma2
    assert rescale == RescaleParams(0.0, 255.0, -1.0, 1.0)
    assert image_shape == (2, 4)


def test_model_without_extras(tmp_path, small_model):
    path = str(tmp_path / "bare.npz")
    formats.save_model(path, small_model)
    _, diagnostics, rescale, image_shape = formats.load_model(path)
    assert diagnostics is None and rescale is None and image_shape is None


def test_wrong_magic(tmp_path, small_model):
    path = str(tmp_path / "encoder.npz")
    formats.save_encoder(path, DenoisingEncoder(np.ones((2, 3)), np.zeros(2)))
    with pytest.raises(ModelFormatException):
        formats.load_model(path)

    garbage = tmp_path / "garbage.npz"
    garbage.write_bytes(b"not a container")
    with pytest.raises(ModelFormatException):
        formats.load_model(str(garbage))
    with pytest.raises(DataLoadException):
        formats.load_model(str(tmp_path / "missing.npz"))


def test_encoder_round_trip(tmp_path):
    encoder = DenoisingEncoder(np.arange(6.0).reshape(2, 3) / 7, np.array([0.1, -0.2]), "quarters")
    path = str(tmp_path / "encoder.npz")
    formats.save_encoder(path, encoder)
    loaded = formats.load_encoder(path)
    np.testing.assert_array_equal(loaded.weights, encoder.weights)
    np.testing.assert_array_equal(loaded.bias, encoder.bias)
    assert loaded.training_mask_kind == "quarters"


def test_report_csv(tmp_path):
    report = ImputationReport(np.array([0.1, 0.3]), 0.2, 0.1 / 3, "exact", "R", "test")
    path = str(tmp_path / "report.csv")
    formats.write_report_csv(path, [report])
    frame = formats.read_report_csv(path)
    assert list(frame.columns) == formats.REPORT_COLUMNS
    row = frame.iloc[0]
    assert (row["method"], row["mask_kind"], row["split"], row["n_examples"]) == ("exact", "R", "test", 2)
    assert row["std_error"] == 0.1 / 3


def test_matrix_csv_with_no_rows(tmp_path):
    path = tmp_path / "empty.csv"
    formats.write_matrix_csv(str(path), np.zeros((0, 3)))
    assert path.read_text().strip() == "x0,x1,x2"


def test_masks_csv(tmp_path):
    masks = [Mask.from_bits("0101"), Mask.from_bits("1111")]
    path = str(tmp_path / "masks.csv")
    formats.write_masks_csv(path, masks)
    assert [m.to_bits() for m in formats.read_masks_csv(path)] == ["0101", "1111"]


def test_pgm_round_trip(tmp_path):
    image = np.arange(12, dtype=np.uint8).reshape(3, 4) * 20
    path = str(tmp_path / "x.pgm")
    formats.write_pgm(path, image)
    np.testing.assert_array_equal(formats.read_pgm(path), image)
    with open(path, "rb") as f:
        assert f.read(11) == b"P5\n4 3\n255\n"
    with pytest.raises(ValidationException):
        formats.write_pgm(path, image.astype(float))


def test_to_gray():
    np.testing.assert_array_equal(formats.to_gray(np.array([-1.0, 0.0, 1.0, 2.0]), -1.0, 1.0), [0, 128, 255, 255])
    with pytest.raises(ValidationException):
        formats.to_gray(np.zeros(2), 1.0, 1.0)


@pytest.mark.parametrize("contents", [
    b"P5\nfour 3\n255\n" + bytes(12),
    b"P5\n4 3\n255\n" + bytes(5),
    b"P5\n# comment without end",
    b"P5\n4 3\n65535\n" + bytes(24),
    b"P2\n4 3\n255\n" + bytes(12),
])
def test_malformed_pgm(tmp_path, contents):
    path = tmp_path / "bad.pgm"
    path.write_bytes(contents)
    with pytest.raises(DataLoadException):
        formats.read_pgm(str(path))


def test_pgm_header_comment(tmp_path):
    path = tmp_path / "commented.pgm"
    path.write_bytes(b"P5\n# made by hand\n2 1\n255\n" + bytes([7, 9]))
    np.testing.assert_array_equal(formats.read_pgm(str(path)), [[7, 9]])
