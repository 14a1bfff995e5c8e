import numpy as np
import pytest

from api.exceptions import DegenerateDataException, ValidationException
from models.factor_model import (
    FactorModel,
    covariance_spectrum,
    fit_ppca,
    random_ppca_model,
    rotate_to_diagonal,
    sample,
    select_latent_dim,
)
from tests.conftest import make_model


def test_fit_matches_sample_spectrum():
    data = sample(make_model(10, 3, seed=4, isotropic=True), 500, seed=1)
    model, diagnostics = fit_ppca(data, 3)

    spectrum = covariance_spectrum(data)
    fitted = np.sort(np.linalg.eigvalsh(model.marginal_covariance()))[::-1]
    np.testing.assert_allclose(fitted[:3], spectrum[:3], rtol=1e-9)
    np.testing.assert_allclose(fitted[3:], diagnostics.sigma2, rtol=1e-9)
    np.testing.assert_allclose(diagnostics.sigma2, spectrum[3:].mean(), rtol=1e-12)
    np.testing.assert_allclose(model.mean, data.mean(axis=0), atol=1e-12)
    assert diagnostics.n_samples == 500
    assert not diagnostics.degenerate


def test_fit_recovers_generating_covariance():
    truth = make_model(10, 2, seed=5, isotropic=True)
    data = sample(truth, 20000, seed=3)
    model, diagnostics = fit_ppca(data, 2)
    np.testing.assert_allclose(model.marginal_covariance(), truth.marginal_covariance(), atol=0.15)
    assert abs(diagnostics.sigma2 - 0.3) < 0.03


def test_loading_sign_rule():
    data = sample(make_model(9, 3, seed=6, isotropic=True), 300, seed=2)
    model, _ = fit_ppca(data, 3)
    for column in model.loading.T:
        assert column[np.argmax(np.abs(column))] > 0


def test_fit_is_deterministic():
    data = sample(make_model(7, 2, seed=7), 100, seed=0)
    a, _ = fit_ppca(data, 2)
    b, _ = fit_ppca(data, 2)
    np.testing.assert_array_equal(a.loading, b.loading)


def test_constant_data_is_degenerate():
    with pytest.raises(DegenerateDataException):
        fit_ppca(np.ones((20, 5)), 2)


def test_rank_k_data_is_degenerate():
    rng = np.random.default_rng(0)
    data = rng.standard_normal((50, 2)) @ rng.standard_normal((2, 6))
    with pytest.raises(DegenerateDataException):
        fit_ppca(data, 2)


@pytest.mark.parametrize("latent_dim", [0, 5, 7])
def test_latent_dim_out_of_range(latent_dim):
    data = np.random.default_rng(0).standard_normal((20, 5))
    with pytest.raises(ValidationException):
        fit_ppca(data, latent_dim)


def test_fit_needs_two_rows():
    with pytest.raises(ValidationException):
        fit_ppca(np.zeros((1, 4)), 1)


def test_select_latent_dim():
    values = np.array([4.0, 3.0, 2.0, 1.0])
    assert select_latent_dim(values, 0.39) == 1
    assert select_latent_dim(values, 0.69) == 2
    assert select_latent_dim(values, 1.0) == 4
    with pytest.raises(ValidationException):
        select_latent_dim(values, 0.0)
    with pytest.raises(ValidationException):
        select_latent_dim(np.array([1.0, 2.0]), 0.5)


def test_select_latent_dim_finds_generating_rank():
    truth = make_model(15, 5, seed=8, isotropic=True)
    truth = FactorModel(truth.loading * 3.0, truth.mean, np.full(15, 0.01))
    data = sample(truth, 4000, seed=4)
    assert select_latent_dim(covariance_spectrum(data), 0.999) >= 5


def test_sample_shape_and_determinism(small_model):
    a = sample(small_model, 50, seed=9)
    b = sample(small_model, 50, seed=9)
    c = sample(small_model, 50, seed=10)
    assert a.shape == (50, small_model.D)
    np.testing.assert_array_equal(a, b)
    assert not np.array_equal(a, c)
    assert sample(small_model, 0, seed=9).shape == (0, small_model.D)
    with pytest.raises(ValidationException):
        sample(small_model, -1, seed=0)


def test_rotate_to_diagonal(small_model):
    rotated, rotation = rotate_to_diagonal(small_model)
    np.testing.assert_allclose(rotation.T @ rotation, np.eye(small_model.K), atol=1e-12)
    np.testing.assert_allclose(rotated.marginal_covariance(), small_model.marginal_covariance(), atol=1e-10)
    precision = rotated.full_precision
    off_diagonal = precision - np.diag(np.diag(precision))
    assert np.max(np.abs(off_diagonal)) < 1e-10 * np.max(np.diag(precision))
    # Σ 的对角元降序
    assert np.all(np.diff(np.diag(rotated.full_covariance)) <= 1e-12)


def test_model_validation():
    with pytest.raises(ValidationException):
        FactorModel(np.ones((3, 1)), np.zeros(3), np.array([1.0, 0.0, 1.0]))


def test_random_ppca_model():
    model = random_ppca_model(24, 3, seed=1)
    assert (model.D, model.K) == (24, 3)
    assert model.is_isotropic
    norms = np.linalg.norm(model.loading, axis=0)
    assert np.all(np.diff(norms) < 0)
    directions = model.loading / norms
    np.testing.assert_allclose(directions.T @ directions, np.eye(3), atol=1e-12)
    np.testing.assert_array_equal(model.loading, random_ppca_model(24, 3, seed=1).loading)
    with pytest.raises(ValidationException):
        random_ppca_model(24, 24)


def test_fit_diagonal_covariance_by_hand():
    # 1/N 协方差恰为 diag(2, 1)，列均值 (3, -1)
    data = np.array([[2.0, 0.0], [-2.0, 0.0], [0.0, np.sqrt(2.0)], [0.0, -np.sqrt(2.0)]]) + [3.0, -1.0]
    model, diagnostics = fit_ppca(data, 1)
    assert diagnostics.sigma2 == pytest.approx(1.0, abs=1e-12)
    np.testing.assert_allclose(model.loading, [[1.0], [0.0]], atol=1e-12)
    np.testing.assert_allclose(model.mean, [3.0, -1.0], atol=1e-12)


def test_fit_isotropic_data_has_zero_loading():
    data = np.array([[2.0, 0.0], [-2.0, 0.0], [0.0, 2.0], [0.0, -2.0]])
    model, diagnostics = fit_ppca(data, 1)
    assert diagnostics.sigma2 == pytest.approx(2.0, abs=1e-12)
    np.testing.assert_allclose(model.loading, np.zeros((2, 1)), atol=1e-6)


@pytest.mark.parametrize("eigenvalues,target,expected", [
    ((9.0, 1.0), 0.9, 1),
    ((5.0, 3.0, 2.0), 0.85, 3),
    ((1.0, 0.0, 0.0), 1.0, 1),
])
def test_select_latent_dim_examples(eigenvalues, target, expected):
    assert select_latent_dim(np.array(eigenvalues), target) == expected
