"""
数据填补 - 把隐变量后验解码回数据空间，填补缺失值并评分
"""
import logging
import math
from dataclasses import dataclass, replace
from typing import Callable, Dict, List, Optional, Sequence

import numpy as np

from api.exceptions import (
    DegenerateDataException,
    DimensionMismatchException,
    ValidationException,
)
from models.base import BaseModel, as_matrix, as_vector, frozen_array
from models.factor_model import FactorModel
from models.inference import (
    DenoisingEncoder,
    GaussianPosterior,
    Mask,
    de_predict,
    exact_posterior,
    fca_posterior,
    mean_impute_input,
    sca_posterior,
)

logger = logging.getLogger(__name__)

# 报告中的方法顺序
METHODS = ("mean", "fca", "sca", "de", "de_star", "exact")
ENCODER_METHODS = ("de", "de_star")

METHOD_TITLES = {
    "mean": "Mean imputation",
    "fca": "Full-covariance approx.",
    "sca": "Scaled-covariance approx.",
    "de": "Denoising encoder",
    "de_star": "Denoising encoder*",
    "exact": "Exact inference",
}

_POSTERIORS: Dict[str, Callable[..., GaussianPosterior]] = {
    "exact": exact_posterior,
    "fca": fca_posterior,
    "sca": sca_posterior,
}


@dataclass(frozen=True, repr=False)
class ImputationResult(BaseModel):
    """单个样本的填补结果"""

    completed: np.ndarray        # 观测位置保持原值，缺失位置为填补值
    predictive_std: np.ndarray   # 缺失位置的预测标准差，观测位置为 0
    method: str
    posterior: Optional[GaussianPosterior] = None

    def __post_init__(self):
        object.__setattr__(self, "completed", frozen_array(self.completed))
        object.__setattr__(self, "predictive_std", frozen_array(self.predictive_std))


@dataclass(frozen=True, repr=False)
class ImputationReport(BaseModel):
    """某个 (方法, 缺失机制, 数据划分) 的填补误差汇总"""

    per_example_error: np.ndarray
    mean_error: float
    std_error: float
    method: str
    mask_kind: str
    split: str

    def __post_init__(self):
        object.__setattr__(self, "per_example_error", frozen_array(self.per_example_error))

    @property
    def n_examples(self) -> int:
        return int(self.per_example_error.shape[0])

    def to_row(self) -> Dict:
        """CSV 行：method, mask_kind, split, n_examples, mean_error, std_error"""
        return {
            "method": self.method,
            "mask_kind": self.mask_kind,
            "split": self.split,
            "n_examples": self.n_examples,
            "mean_error": float(self.mean_error),
            "std_error": float(self.std_error),
        }


def decode(model: FactorModel, z_mean) -> np.ndarray:
    """预测均值 W·z + μ（不采样噪声）"""
    z = as_vector(z_mean, model.K, "z_mean")
    return model.loading @ z + model.mean


def predictive_variance(model: FactorModel, covariance: np.ndarray) -> np.ndarray:
    """每一维的预测方差 v_jᵀΣv_j + ψ_jj"""
    return np.einsum("jk,kl,jl->j", model.loading, covariance, model.loading) + model.noise_diag


def posterior_for(method: str, model: FactorModel, encoder: Optional[DenoisingEncoder],
                  x_visible, mask: Mask) -> GaussianPosterior:
    """按方法名计算隐变量后验"""
    if method in ENCODER_METHODS:
        if encoder is None:
            raise ValidationException(f"方法 {method} 需要去噪编码器")
        return replace(de_predict(encoder, model, x_visible, mask), method=method)
    if method not in _POSTERIORS:
        raise ValidationException(f"方法 {method} 没有隐变量后验")
    return _POSTERIORS[method](model, x_visible, mask)


def impute(method: str, model: FactorModel, encoder: Optional[DenoisingEncoder],
           x_visible, mask: Mask) -> ImputationResult:
    """
    填补单个样本的缺失值

    Args:
        method: mean / fca / sca / de / de_star / exact
        model: 因子模型
        encoder: 去噪编码器（de / de_star 必需）
        x_visible: 长度 D 的向量，缺失位置的值被忽略
        mask: 缺失模式

    Returns:
        ImputationResult
    """
    if method not in METHODS:
        raise ValidationException(f"未知填补方法: {method}，可选 {METHODS}")
    x = as_vector(x_visible, model.D, "x")
    mask.check_dim(model.D)
    missing = mask.missing

    if method == "mean":
        completed = mean_impute_input(model, x, mask)
        std = np.where(missing, np.sqrt(model.marginal_variance), 0.0)
        return ImputationResult(completed=completed, predictive_std=std, method=method)

    posterior = posterior_for(method, model, encoder, x, mask)
    reconstruction = decode(model, posterior.mean)
    completed = np.where(mask.observed, x, reconstruction)
    std = np.where(missing, np.sqrt(predictive_variance(model, posterior.covariance)), 0.0)
    return ImputationResult(completed=completed, predictive_std=std, method=method, posterior=posterior)


def impute_all(method: str, model: FactorModel, encoder: Optional[DenoisingEncoder],
               data, observed) -> List[ImputationResult]:
    """对一批样本逐个填补（observed 为 N × D 布尔矩阵）"""
    data = as_matrix(data, model.D, "data")
    observed = np.asarray(observed, dtype=bool)
    if observed.shape != data.shape:
        raise DimensionMismatchException(f"缺失模式形状 {observed.shape} 与数据 {data.shape} 不符")
    return [impute(method, model, encoder, row, Mask(obs)) for row, obs in zip(data, observed)]


def score(truth, results: Sequence[ImputationResult], masks: Sequence[Mask],
          method: Optional[str] = None, mask_kind: str = "", split: str = "") -> ImputationReport:
    """
    计算均方填补误差

    每个样本的误差为其缺失位置上 (truth_j − completed_j)² 的均值；
    没有缺失值的样本不计入 N。汇总使用补偿求和，结果与顺序无关。
    """
    truth = as_matrix(truth, name="truth")
    if not (truth.shape[0] == len(results) == len(masks)):
        raise DimensionMismatchException(
            f"样本数不一致: truth={truth.shape[0]}, results={len(results)}, masks={len(masks)}"
        )

    errors = []
    skipped = 0
    for row, result, mask in zip(truth, results, masks):
        mask.check_dim(truth.shape[1])
        if mask.n_missing == 0:
            skipped += 1
            continue
        diff = row[mask.missing] - result.completed[mask.missing]
        errors.append(math.fsum(diff * diff) / mask.n_missing)
    if skipped:
        logger.warning(f"{skipped} 个样本没有缺失值，不计入评分")
    if not errors:
        raise DegenerateDataException("没有包含缺失值的样本，无法评分")

    n = len(errors)
    mean_error = math.fsum(errors) / n
    if n > 1:
        variance = math.fsum((e - mean_error) ** 2 for e in errors) / (n - 1)
        std_error = math.sqrt(variance / n)
    else:
        std_error = 0.0

    if method is None:
        method = results[0].method if results else ""
    return ImputationReport(
        per_example_error=np.array(errors),
        mean_error=mean_error,
        std_error=std_error,
        method=method,
        mask_kind=mask_kind,
        split=split,
    )
