import math

import numpy as np
import pytest

from api.exceptions import DegenerateDataException, ValidationException
from models.factor_model import sample
from models.imputation import (
    ImputationResult,
    METHODS,
    impute,
    impute_all,
    posterior_for,
    score,
)
from models.inference import Mask, train_denoising_encoder
from models.masking import MaskGenerator


@pytest.fixture
def encoder(small_model):
    data = sample(small_model, 300, seed=1)
    return train_denoising_encoder(small_model, data, MaskGenerator.random(0.5), seed=0)


@pytest.mark.parametrize("method", METHODS)
def test_observed_entries_are_kept(small_model, encoder, method):
    x = sample(small_model, 1, seed=2)[0]
    mask = Mask(np.arange(small_model.D) % 3 != 0)
    result = impute(method, small_model, encoder, x, mask)
    np.testing.assert_array_equal(result.completed[mask.observed], x[mask.observed])
    np.testing.assert_array_equal(result.predictive_std[mask.observed], 0.0)
    assert np.all(result.predictive_std[mask.missing] > 0)
    assert result.method == method


def test_mean_imputation_fills_model_mean(small_model):
    x = np.zeros(small_model.D)
    mask = Mask.all_missing(small_model.D)
    result = impute("mean", small_model, None, x, mask)
    np.testing.assert_array_equal(result.completed, small_model.mean)
    np.testing.assert_allclose(result.predictive_std ** 2, small_model.marginal_variance)
    assert result.posterior is None


def test_encoder_methods_need_encoder(small_model):
    mask = Mask.all_observed(small_model.D)
    with pytest.raises(ValidationException):
        impute("de", small_model, None, np.zeros(small_model.D), mask)
    with pytest.raises(ValidationException):
        impute("median", small_model, None, np.zeros(small_model.D), mask)


def test_de_star_is_labelled(small_model, encoder):
    mask = Mask(np.arange(small_model.D) < 4)
    posterior = posterior_for("de_star", small_model, encoder, np.zeros(small_model.D), mask)
    assert posterior.method == "de_star"


def test_score_by_hand():
    truth = np.array([[1.0, 2.0, 3.0], [0.0, 0.0, 0.0], [5.0, 5.0, 5.0]])
    completed = np.array([[1.0, 0.0, 3.0], [1.0, 1.0, 0.0], [5.0, 5.0, 5.0]])
    masks = [Mask.from_bits("101"), Mask.from_bits("001"), Mask.from_bits("111")]
    results = [ImputationResult(c, np.zeros(3), "exact") for c in completed]

    report = score(truth, results, masks, mask_kind="R", split="test")
    # 第三个样本没有缺失值，不计入
    assert report.n_examples == 2
    assert report.mean_error == pytest.approx(2.5)
    assert report.std_error == pytest.approx(math.sqrt(((4 - 2.5) ** 2 + (1 - 2.5) ** 2) / 1 / 2))
    assert report.to_row()["method"] == "exact"
    assert report.to_row()["split"] == "test"


def test_score_without_missing_entries():
    truth = np.zeros((2, 3))
    results = [ImputationResult(row, np.zeros(3), "mean") for row in truth]
    with pytest.raises(DegenerateDataException):
        score(truth, results, [Mask.all_observed(3)] * 2)


def test_score_is_order_independent(small_model):
    data = sample(small_model, 40, seed=3)
    observed = MaskGenerator.random(0.5, seed=2).generate(40, small_model.D)
    results = impute_all("exact", small_model, None, data, observed)
    masks = [Mask(o) for o in observed]
    forward = score(data, results, masks)
    order = np.arange(40)[::-1]
    backward = score(data[order], [results[i] for i in order], [masks[i] for i in order])
    assert forward.mean_error == backward.mean_error


def test_exact_beats_mean_imputation(image_model):
    data = sample(image_model, 200, seed=4)
    observed = MaskGenerator.random(0.5, seed=5).generate(200, image_model.D)
    masks = [Mask(o) for o in observed]
    exact = score(data, impute_all("exact", image_model, None, data, observed), masks)
    mean = score(data, impute_all("mean", image_model, None, data, observed), masks)
    assert exact.mean_error < mean.mean_error


@pytest.mark.parametrize("generator", [MaskGenerator.random(0.5, seed=6), MaskGenerator.quarters(4, 6, seed=6)])
def test_exact_is_no_worse_than_fca(image_model, generator):
    data = sample(image_model, 300, seed=7)
    observed = generator.generate(300, image_model.D)
    masks = [Mask(o) for o in observed]
    exact = score(data, impute_all("exact", image_model, None, data, observed), masks)
    fca = score(data, impute_all("fca", image_model, None, data, observed), masks)
    assert exact.mean_error <= fca.mean_error + 2 * math.hypot(exact.std_error, fca.std_error)
