"""
隐变量后验推断 - 任意缺失模式下的 p(z | x_v, m)

精确推断，以及三种近似：
- FCA：使用完整数据的后验协方差
- SCA：后验精度在 I_K 与 P_{z|x} 之间按观测比例线性插值
- DE：从均值填补后的输入回归到完整数据后验均值的仿射映射

所有方法统一的调用约定：x 为长度 D 的完整向量加上 Mask，缺失位置的值被忽略。
"""
import logging
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy import linalg

from api.exceptions import (
    DimensionMismatchException,
    NumericalException,
    ValidationException,
)
from models.base import (
    BaseModel,
    as_matrix,
    as_vector,
    frozen_array,
    require_finite,
    symmetrize,
)
from models.factor_model import FactorModel, cholesky_factor

logger = logging.getLogger(__name__)

# 判定精度矩阵为对角阵的相对容差
DIAGONAL_TOLERANCE = 1e-12


@dataclass(frozen=True, repr=False)
class Mask(BaseModel):
    """缺失指示 m：observed[j] 为 True 表示 x_j 被观测到"""

    observed: np.ndarray

    def __post_init__(self):
        observed = np.asarray(self.observed)
        if observed.ndim != 1:
            raise DimensionMismatchException(f"Mask 应为一维，实际形状 {observed.shape}")
        object.__setattr__(self, "observed", frozen_array(observed, dtype=bool))

    @classmethod
    def all_observed(cls, dim: int) -> "Mask":
        return cls(np.ones(dim, dtype=bool))

    @classmethod
    def all_missing(cls, dim: int) -> "Mask":
        return cls(np.zeros(dim, dtype=bool))

    @classmethod
    def from_bits(cls, bits: str) -> "Mask":
        """由比特串构造（'0'=缺失，'1'=观测）"""
        bits = bits.strip()
        if not bits or set(bits) - {"0", "1"}:
            raise ValidationException(f"非法的 Mask 比特串: {bits!r}")
        return cls(np.array([c == "1" for c in bits], dtype=bool))

    def to_bits(self) -> str:
        return "".join("1" if o else "0" for o in self.observed)

    @property
    def D(self) -> int:
        return self.observed.shape[0]

    @property
    def missing(self) -> np.ndarray:
        return ~self.observed

    @property
    def n_observed(self) -> int:
        """D_v"""
        return int(np.count_nonzero(self.observed))

    @property
    def n_missing(self) -> int:
        """D_m"""
        return self.D - self.n_observed

    def check_dim(self, dim: int):
        if self.D != dim:
            raise DimensionMismatchException(f"Mask 长度 {self.D} 与模型维数 D={dim} 不符")

    def is_subset_of(self, other: "Mask") -> bool:
        """观测集合是否包含于 other 的观测集合"""
        return bool(np.all(other.observed[self.observed]))


@dataclass(frozen=True, repr=False)
class GaussianPosterior(BaseModel):
    """隐变量后验 N(mean, covariance)"""

    mean: np.ndarray                       # 长度 K
    covariance: np.ndarray                 # K × K
    precision: Optional[np.ndarray] = None
    method: str = "exact"
    surrogate_covariance: bool = False     # 协方差是否为替代量（DE 使用 SCA 协方差）

    def __post_init__(self):
        mean = as_vector(self.mean, name="posterior mean")
        covariance = as_matrix(self.covariance, mean.shape[0], "posterior covariance")
        if covariance.shape[0] != mean.shape[0]:
            raise DimensionMismatchException("后验协方差应为 K × K")
        object.__setattr__(self, "mean", frozen_array(mean))
        object.__setattr__(self, "covariance", frozen_array(covariance))
        if self.precision is not None:
            object.__setattr__(self, "precision", frozen_array(self.precision))

    @property
    def K(self) -> int:
        return self.mean.shape[0]

    def log_det_covariance(self) -> float:
        sign, logdet = np.linalg.slogdet(self.covariance)
        if sign <= 0:
            raise NumericalException("后验协方差不是正定的")
        return float(logdet)

    def det_covariance(self) -> float:
        return float(np.linalg.det(self.covariance))


@dataclass(frozen=True, repr=False)
class DenoisingEncoder(BaseModel):
    """去噪编码器：z ≈ A·x^mi + b"""

    weights: np.ndarray               # K × D
    bias: np.ndarray                  # 长度 K
    training_mask_kind: str = "random"

    def __post_init__(self):
        weights = require_finite(as_matrix(self.weights, name="weights"), "weights")
        bias = require_finite(as_vector(self.bias, weights.shape[0], "bias"), "bias")
        object.__setattr__(self, "weights", frozen_array(weights))
        object.__setattr__(self, "bias", frozen_array(bias))

    @property
    def K(self) -> int:
        return self.weights.shape[0]

    @property
    def D(self) -> int:
        return self.weights.shape[1]


def _prepare(model: FactorModel, x_visible, mask: Mask) -> np.ndarray:
    """检查维数，并要求观测位置为有限值"""
    x = as_vector(x_visible, model.D, "x")
    mask.check_dim(model.D)
    require_finite(x[mask.observed], "观测值")
    return x


def _solve_posterior(precision: np.ndarray, rhs: np.ndarray, method: str,
                     surrogate: bool = False) -> GaussianPosterior:
    """由精度矩阵和右端项 Σ⁻¹μ 求后验"""
    precision = symmetrize(precision)
    factor = cholesky_factor(precision)
    mean = linalg.cho_solve(factor, rhs)
    covariance = symmetrize(linalg.cho_solve(factor, np.eye(precision.shape[0])))
    return GaussianPosterior(
        mean=mean,
        covariance=covariance,
        precision=precision,
        method=method,
        surrogate_covariance=surrogate,
    )


def exact_posterior(model: FactorModel, x_visible, mask: Mask) -> GaussianPosterior:
    """
    精确后验

    Σ = (I_K + W_vᵀΨ_v⁻¹W_v)⁻¹，μ = Σ W_vᵀΨ_v⁻¹(x_v − μ_v)。
    只对 K × K 精度矩阵做 Cholesky 分解。
    """
    x = _prepare(model, x_visible, mask)
    observed = mask.observed
    loading_v = model.loading[observed]
    scaled_v = model.psi_inv_loading[observed]

    precision = np.eye(model.K) + loading_v.T @ scaled_v
    rhs = scaled_v.T @ (x[observed] - model.mean[observed])
    return _solve_posterior(precision, rhs, "exact")


def exact_posterior_rank1(model: FactorModel, x_visible, mask: Mask) -> GaussianPosterior:
    """
    精确后验的秩 1 累加形式

    精度 = I_K + Σ_j m_j ψ_jj⁻¹ v_j v_jᵀ，逐项累加；与 exact_posterior 互为校验。
    """
    x = _prepare(model, x_visible, mask)
    precision = np.eye(model.K)
    rhs = np.zeros(model.K)
    for j in np.flatnonzero(mask.observed):
        v = model.loading[j]
        weight = 1.0 / model.noise_diag[j]
        precision += weight * np.outer(v, v)
        rhs += weight * (x[j] - model.mean[j]) * v
    return _solve_posterior(precision, rhs, "exact")


def full_posterior_precision(model: FactorModel) -> np.ndarray:
    """完整数据的后验精度 P_{z|x} = I_K + WᵀΨ⁻¹W"""
    return np.array(model.full_precision)


def mean_impute_input(model: FactorModel, x_visible, mask: Mask) -> np.ndarray:
    """x^mi：观测位置保留原值，缺失位置填入 μ_j"""
    x = _prepare(model, x_visible, mask)
    return np.where(mask.observed, x, model.mean)


def fca_posterior(model: FactorModel, x_visible, mask: Mask) -> GaussianPosterior:
    """
    完整协方差近似（FCA）

    协方差固定为 Σ_{z|x}，均值 = Σ_{z|x}WᵀΨ⁻¹(x^mi − μ)。
    全缺失时协方差仍为 Σ_{z|x} 而不是先验。
    """
    centered = mean_impute_input(model, x_visible, mask) - model.mean
    return GaussianPosterior(
        mean=model.encoder_matrix @ centered,
        covariance=model.full_covariance,
        precision=model.full_precision,
        method="fca",
    )


def is_diagonal(matrix: np.ndarray, tolerance: float = DIAGONAL_TOLERANCE) -> bool:
    """非对角元相对于最大对角元可忽略"""
    off_diagonal = matrix - np.diag(np.diag(matrix))
    return bool(np.max(np.abs(off_diagonal), initial=0.0) <= tolerance * np.max(np.abs(np.diag(matrix))))


def sca_precision(model: FactorModel, mask: Mask) -> np.ndarray:
    """SCA 精度：(D_m/D)·I_K + (D_v/D)·P_{z|x}"""
    mask.check_dim(model.D)
    missing_weight = mask.n_missing / model.D
    observed_weight = mask.n_observed / model.D
    return missing_weight * np.eye(model.K) + observed_weight * model.full_precision


def sca_posterior(model: FactorModel, x_visible, mask: Mask) -> GaussianPosterior:
    """
    比例协方差近似（SCA）

    精度按观测比例在 I_K 与 P_{z|x} 之间插值，均值沿用 FCA 的公式。
    P_{z|x} 为对角阵（因子旋转之后）时直接逐元素求逆。
    """
    centered = mean_impute_input(model, x_visible, mask) - model.mean
    precision = sca_precision(model, mask)
    rhs = model.psi_inv_loading.T @ centered

    diagonal = np.diag(precision)
    if is_diagonal(precision):
        return GaussianPosterior(
            mean=rhs / diagonal,
            covariance=np.diag(1.0 / diagonal),
            precision=precision,
            method="sca",
        )
    return _solve_posterior(precision, rhs, "sca")


def train_denoising_encoder(model: FactorModel, train_data, mask_generator, seed: int,
                            ridge_factor: float = 1e-8) -> DenoisingEncoder:
    """
    训练去噪编码器

    目标为完整数据的精确后验均值；每个训练样本只抽取一个缺失模式，
    在 x^mi 上做带截距的最小二乘，对权重加 ridge_factor·tr(XᵀX)/D 的岭项。

    Args:
        model: 因子模型
        train_data: N × D 完整训练数据
        mask_generator: MaskGenerator，使用 seed 重新设定种子
        seed: 去噪编码器的随机种子

    Returns:
        DenoisingEncoder
    """
    data = require_finite(as_matrix(train_data, model.D, "train_data"), "train_data")
    n, d = data.shape
    if n == 0:
        raise ValidationException("训练集为空")
    if n < d + 1:
        logger.warning(f"训练样本数 N={n} 小于 D+1={d + 1}，岭项将占主导")

    targets = (data - model.mean) @ model.encoder_matrix.T
    observed = mask_generator.with_seed(seed).generate(n, d)
    if observed.shape != data.shape:
        raise DimensionMismatchException(f"缺失模式形状 {observed.shape} 与训练数据 {data.shape} 不符")
    inputs = np.where(observed, data, model.mean)

    # 截距不加惩罚：先中心化再求解
    ridge = ridge_factor * float(np.sum(inputs ** 2)) / d
    input_center = inputs.mean(axis=0)
    target_center = targets.mean(axis=0)
    centered_inputs = inputs - input_center
    gram = centered_inputs.T @ centered_inputs + ridge * np.eye(d)
    cross = centered_inputs.T @ (targets - target_center)
    try:
        weights = linalg.solve(gram, cross, assume_a="pos").T
    except (linalg.LinAlgError, ValueError) as e:
        raise NumericalException(f"去噪编码器求解失败: {e}") from e
    bias = target_center - weights @ input_center

    logger.info(f"✓ 去噪编码器训练完成: N={n}, 缺失机制={mask_generator.kind}, 岭项={ridge:.3g}")
    return DenoisingEncoder(weights=weights, bias=bias, training_mask_kind=mask_generator.kind)


def de_predict(encoder: DenoisingEncoder, model: FactorModel, x_visible, mask: Mask) -> GaussianPosterior:
    """
    去噪编码器预测

    均值 = A·x^mi + b；编码器本身不给出不确定性，协方差取同一 Mask 下的 SCA 协方差。
    """
    if encoder.D != model.D or encoder.K != model.K:
        raise DimensionMismatchException(
            f"编码器形状 {encoder.weights.shape} 与模型 (K={model.K}, D={model.D}) 不符"
        )
    inputs = mean_impute_input(model, x_visible, mask)
    precision = sca_precision(model, mask)
    factor = cholesky_factor(symmetrize(precision))
    return GaussianPosterior(
        mean=encoder.weights @ inputs + encoder.bias,
        covariance=symmetrize(linalg.cho_solve(factor, np.eye(model.K))),
        precision=precision,
        method="de",
        surrogate_covariance=True,
    )
