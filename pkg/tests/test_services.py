import math
import os

import numpy as np
import pytest

from api.exceptions import DataLoadException, ValidationException
from api.repositories import ArtifactRepository
from api.services import (
    BenchmarkService,
    ImputationService,
    ModelService,
    ReportService,
    build_config,
    load_config_file,
)
from config import Config
from data import formats
from models.factor_model import random_ppca_model, sample


def synthetic_config(out, **overrides):
    values = dict(
        source="synthetic", width=4, height=6, latent_dim=3,
        n_test=300, n_train=600, mask="random:0.5", methods="all", out=str(out),
    )
    values.update(overrides)
    return build_config(overrides=values)


def run(config):
    return BenchmarkService(ArtifactRepository(config.out)).run(config)


def errors_by_method(reports, split="test"):
    return {r.method: r for r in reports if r.split == split}


# ==================== 配置 ====================

def test_build_config_precedence():
    config = build_config({"mask": "quarters:cycle", "seed_masks": 3, "width": 4, "height": 6},
                          {"seed_masks": 5, "seed_de": None})
    assert config.mask == "quarters:cycle"
    assert config.seed_masks == 5
    assert config.seed_de == 0
    assert config.mask_generator().kind == "quarters"


def test_build_config_rejects_bad_values():
    with pytest.raises(ValidationException):
        build_config({"unknown_key": 1})
    with pytest.raises(ValidationException):
        build_config(overrides={"methods": ""})
    with pytest.raises(ValidationException):
        build_config(overrides={"width": 4})
    with pytest.raises(ValidationException):
        build_config(overrides={"mask": "stripes"})
    with pytest.raises(ValidationException):
        build_config(overrides={"seed_split": -1})


def test_methods_are_normalised():
    assert build_config(overrides={"methods": "exact,mean"}).methods == ["mean", "exact"]
    assert len(build_config(overrides={"methods": "all"}).methods) == 6


def test_load_config_file(tmp_path):
    path = tmp_path / "experiment.yaml"
    path.write_text("mask: random:0.3\nseed-split: 7\nmethods: [exact, sca]\n")
    config = build_config(load_config_file(str(path)))
    assert config.seed_split == 7
    assert config.methods == ["sca", "exact"]
    with pytest.raises(DataLoadException):
        load_config_file(str(tmp_path / "missing.yaml"))


# ==================== 基准实验 ====================

def test_synthetic_benchmark_random(tmp_path):
    result = run(synthetic_config(tmp_path))
    reports = errors_by_method(result["reports"])
    assert len(result["reports"]) == 6
    assert {r.mask_kind for r in result["reports"]} == {"R"}
    assert min(reports.values(), key=lambda r: r.mean_error).method == "exact"
    assert reports["mean"].mean_error > reports["fca"].mean_error
    # 随机缺失下 DE* 与 DE 是同一个编码器
    assert reports["de"].mean_error == reports["de_star"].mean_error
    assert (tmp_path / "report.csv").is_file()
    masks = ArtifactRepository(str(tmp_path)).load_masks(str(tmp_path / "masks_test.csv"))
    assert len(masks) == 300
    assert all(m.D == 24 for m in masks)


def test_synthetic_benchmark_quarters_with_images(tmp_path):
    config = synthetic_config(tmp_path, mask="quarters:uniform", images=2, sweep_step=2)
    result = run(config)
    reports = errors_by_method(result["reports"])
    assert {r.mask_kind for r in result["reports"]} == {"Q"}
    assert reports["de"].mean_error != reports["de_star"].mean_error
    assert reports["exact"].mean_error < reports["mean"].mean_error

    strip = formats.read_pgm(str(tmp_path / "images" / "strip_000.pgm"))
    # 两行面板，每行 2 + 6 个 4×6 面板，间隔 1 像素
    assert strip.shape == (2 * 7 - 1, 8 * 5 - 1)
    sweep = formats.read_pgm(str(tmp_path / "images" / "sweep.pgm"))
    assert sweep.shape == (13, 4 * 5 - 1)
    assert len(result["images"]) == 3


def test_benchmark_is_deterministic(tmp_path):
    run(synthetic_config(tmp_path / "a", n_test=50, n_train=100))
    run(synthetic_config(tmp_path / "b", n_test=50, n_train=100))
    assert (tmp_path / "a" / "report.csv").read_bytes() == (tmp_path / "b" / "report.csv").read_bytes()


def test_data_benchmark_scores_both_splits(tmp_path):
    values = sample(random_ppca_model(24, 3, seed=1), 120, seed=2)
    data_path = tmp_path / "data.csv"
    data_path.write_text("\n".join(",".join(repr(float(v)) for v in row) for row in values) + "\n")

    config = build_config(overrides=dict(
        data=str(data_path), width=4, height=6, latent_dim=3,
        methods="mean,exact", out=str(tmp_path / "out"),
    ))
    result = run(config)
    assert sorted((r.split, r.method) for r in result["reports"]) == [
        ("test", "exact"), ("test", "mean"), ("train", "exact"), ("train", "mean"),
    ]
    assert {r.n_examples for r in result["reports"] if r.split == "train"} <= {96}
    assert (tmp_path / "out" / "model.npz").is_file()


def test_fit_and_sample(tmp_path):
    values = sample(random_ppca_model(24, 3, seed=3), 200, seed=4)
    data_path = tmp_path / "data.csv"
    data_path.write_text("\n".join(",".join(repr(float(v)) for v in row) for row in values) + "\n")
    service = ModelService(ArtifactRepository(str(tmp_path)))

    config = build_config(overrides=dict(data=str(data_path), explained=0.5, out=str(tmp_path)))
    fitted = service.fit(config)
    assert 1 <= fitted["model"].K < 24
    assert fitted["diagnostics"].explained_fraction >= 0.5

    a = service.sample(build_config(overrides=dict(out=str(tmp_path), count=10)), out_path=str(tmp_path / "a.csv"))
    b = service.sample(build_config(overrides=dict(out=str(tmp_path), count=10)), out_path=str(tmp_path / "b.csv"))
    assert a.shape == (10, 24)
    assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()


def test_random_model_spans_whole_image():
    config = build_config(overrides=dict(width=4, height=6, latent_dim=3))
    model = ModelService().random_model(config)
    assert (model.D, model.K) == (24, 3)
    # 每个像素都受所有分量影响，四分之一缺失时剩余像素仍能确定隐变量
    assert np.all(np.abs(model.loading) > 1e-8)


def test_imputation_service(tmp_path, small_model):
    path = str(tmp_path / "model.npz")
    formats.save_model(path, small_model)
    service = ImputationService(path)
    x = [0.5] * small_model.D
    x[0] = None
    result = service.impute(x, "0" + "1" * (small_model.D - 1), "exact")
    assert result["n_missing"] == 1
    assert result["completed"][1:] == [0.5] * (small_model.D - 1)
    assert len(result["posterior"]["mean"]) == small_model.K
    with pytest.raises(ValidationException):
        service.posterior(x, [0] + [1] * (small_model.D - 1), "mean")
    with pytest.raises(ValidationException):
        service.impute(x, [1] * small_model.D, "de")


# ==================== 报告 ====================

def test_report_rendering(tmp_path):
    run(synthetic_config(tmp_path, n_test=30, n_train=60, methods="mean,exact"))
    table = ReportService().render(str(tmp_path / "report.csv"))
    lines = table.splitlines()
    assert "×10²" in lines[0]
    assert lines[1].split() == ["mask", "split", "mean", "exact"]
    assert lines[3].startswith("R")
    assert "±" in lines[3]


# ==================== 桌面规模 ====================

def combined_se(a, b):
    return math.sqrt(a.std_error ** 2 + b.std_error ** 2)


def assert_worse(worse, better):
    assert worse.mean_error - better.mean_error >= 2 * combined_se(worse, better), (
        f"{worse.method} ({worse.mean_error:.5g}) 应比 {better.method} ({better.mean_error:.5g}) 差"
    )


@pytest.mark.slow
def test_desk_scale_orderings(tmp_path):
    common = dict(width=20, height=28, latent_dim=43, n_test=400, n_train=1600)
    random_reports = errors_by_method(run(synthetic_config(tmp_path / "r", **common))["reports"])
    assert_worse(random_reports["mean"], random_reports["fca"])
    assert_worse(random_reports["fca"], random_reports["sca"])
    assert_worse(random_reports["sca"], random_reports["exact"])
    assert random_reports["de"].mean_error == random_reports["de_star"].mean_error

    quarter_reports = errors_by_method(
        run(synthetic_config(tmp_path / "q", mask="quarters:uniform", **common))["reports"]
    )
    assert_worse(quarter_reports["mean"], quarter_reports["fca"])
    assert_worse(quarter_reports["fca"], quarter_reports["sca"])
    assert_worse(quarter_reports["sca"], quarter_reports["exact"])
    assert_worse(quarter_reports["fca"], quarter_reports["exact"])
    assert_worse(quarter_reports["de_star"], quarter_reports["de"])


# ==================== Frey 人脸数据 ====================

def frey_config(out, **overrides):
    path = Config.FREY_DATA_PATH
    if not path or not os.path.isfile(path):
        pytest.skip("未设置 FAMI_FREY_DATA 或文件不存在")
    values = dict(
        data=path, format="mat" if path.endswith(".mat") else "csv",
        width=20, height=28, latent_dim=43, methods="all", out=str(out),
    )
    values.update(overrides)
    return build_config(overrides=values)


@pytest.mark.slow
def test_frey_fit_explains_ninety_percent(tmp_path):
    config = frey_config(tmp_path)
    fitted = ModelService(ArtifactRepository(str(tmp_path))).fit(config)
    assert fitted["model"].K == 43
    assert fitted["diagnostics"].explained_fraction >= 0.90


@pytest.mark.slow
@pytest.mark.parametrize("mask,exact_test", [("random:0.5", 0.7165e-2), ("quarters:uniform", 1.3677e-2)])
def test_frey_orderings(tmp_path, mask, exact_test):
    reports = run(frey_config(tmp_path, mask=mask))["reports"]
    for split_name in ("train", "test"):
        by_method = errors_by_method(reports, split_name)
        assert_worse(by_method["mean"], by_method["fca"])
        assert_worse(by_method["fca"], by_method["sca"])
        if mask.startswith("random"):
            assert_worse(by_method["sca"], by_method["exact"])
            assert by_method["de"].mean_error == by_method["de_star"].mean_error
        else:
            assert_worse(by_method["de_star"], by_method["de"])
    exact = errors_by_method(reports)["exact"].mean_error
    assert exact == pytest.approx(exact_test, rel=0.2)
