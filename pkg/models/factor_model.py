"""
因子模型 - 因子分析 / 概率PCA 生成模型

生成模型：z ~ N(0, I_K)，x | z ~ N(W z + μ, Ψ)，Ψ 为对角阵。
PPCA 是 Ψ = σ²I 的特例，可由样本协方差的特征分解得到闭式最大似然解。
"""
import logging
from dataclasses import dataclass
from functools import cached_property
from typing import Tuple

import numpy as np
from scipy import linalg

from api.exceptions import (
    DegenerateDataException,
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
from models.rng import STREAM_MODEL, STREAM_SAMPLE, make_rng

logger = logging.getLogger(__name__)


@dataclass(frozen=True, repr=False)
class FactorModel(BaseModel):
    """因子分析模型 (W, μ, Ψ)"""

    loading: np.ndarray      # D × K，第 j 行为 v_jᵀ
    mean: np.ndarray         # 长度 D
    noise_diag: np.ndarray   # Ψ 的对角线，长度 D

    def __post_init__(self):
        loading = as_matrix(self.loading, name="loading")
        d, k = loading.shape
        if d < 1 or k < 1:
            raise ValidationException(f"loading 形状非法: {loading.shape}")
        require_finite(loading, "loading")
        mean = require_finite(as_vector(self.mean, d, "mean"), "mean")
        noise = require_finite(as_vector(self.noise_diag, d, "noise_diag"), "noise_diag")
        if np.any(noise <= 0):
            raise ValidationException("noise_diag 必须严格为正")

        object.__setattr__(self, "loading", frozen_array(loading))
        object.__setattr__(self, "mean", frozen_array(mean))
        object.__setattr__(self, "noise_diag", frozen_array(noise))

    @property
    def D(self) -> int:
        return self.loading.shape[0]

    @property
    def K(self) -> int:
        return self.loading.shape[1]

    @property
    def is_isotropic(self) -> bool:
        """是否为 PPCA（各向同性噪声）"""
        return bool(np.all(self.noise_diag == self.noise_diag[0]))

    # 完整数据下的量只计算一次，之后只读

    @cached_property
    def psi_inv_loading(self) -> np.ndarray:
        """Ψ⁻¹W (D × K)"""
        return frozen_array(self.loading / self.noise_diag[:, None])

    @cached_property
    def full_precision(self) -> np.ndarray:
        """P_{z|x} = I_K + WᵀΨ⁻¹W"""
        precision = np.eye(self.K) + self.loading.T @ self.psi_inv_loading
        return frozen_array(symmetrize(precision))

    @cached_property
    def full_covariance(self) -> np.ndarray:
        """Σ_{z|x} = P_{z|x}⁻¹"""
        factor = cholesky_factor(self.full_precision)
        return frozen_array(symmetrize(linalg.cho_solve(factor, np.eye(self.K))))

    @cached_property
    def encoder_matrix(self) -> np.ndarray:
        """完整数据下的精确编码矩阵 Σ_{z|x}WᵀΨ⁻¹ (K × D)"""
        return frozen_array(self.full_covariance @ self.psi_inv_loading.T)

    @cached_property
    def marginal_variance(self) -> np.ndarray:
        """diag(WWᵀ + Ψ)"""
        return frozen_array(np.sum(self.loading ** 2, axis=1) + self.noise_diag)

    def marginal_covariance(self) -> np.ndarray:
        """WWᵀ + Ψ (D × D)，仅供检验使用"""
        return self.loading @ self.loading.T + np.diag(self.noise_diag)


@dataclass(frozen=True, repr=False)
class FitDiagnostics(BaseModel):
    """PPCA 拟合诊断信息"""

    eigenvalues: np.ndarray       # 样本协方差谱（降序，长度 D）
    sigma2: float                 # 最大似然残差方差
    explained_fraction: float     # 前 K 个分量解释的方差比例
    n_samples: int = 0
    clamped_components: int = 0   # λ_i − σ² < 0 被截断为 0 的分量数
    clamped_eigenvalues: int = 0  # 舍入误差导致的负特征值个数

    def __post_init__(self):
        object.__setattr__(self, "eigenvalues", frozen_array(self.eigenvalues))
        object.__setattr__(self, "sigma2", float(self.sigma2))
        object.__setattr__(self, "explained_fraction", float(self.explained_fraction))

    @property
    def degenerate(self) -> bool:
        """是否有分量被截断"""
        return self.clamped_components > 0 or self.clamped_eigenvalues > 0


def cholesky_factor(matrix: np.ndarray):
    """对称正定矩阵的 Cholesky 分解，失败时抛出 NumericalException"""
    try:
        return linalg.cho_factor(matrix, lower=True, check_finite=True)
    except (linalg.LinAlgError, ValueError) as e:
        raise NumericalException(f"Cholesky 分解失败: {e}") from e


def canonical_signs(vectors: np.ndarray) -> np.ndarray:
    """
    固定特征向量的符号：每列绝对值最大的元素为正

    绝对值相同时取下标最小的元素。
    """
    pivots = np.argmax(np.abs(vectors), axis=0)
    signs = np.sign(vectors[pivots, np.arange(vectors.shape[1])])
    signs[signs == 0] = 1.0
    return vectors * signs


def _sorted_eigh(matrix: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """对称矩阵特征分解，特征值降序，相等时保持原有顺序"""
    try:
        values, vectors = np.linalg.eigh(matrix)
    except np.linalg.LinAlgError as e:
        raise NumericalException(f"特征分解失败: {e}") from e
    order = np.argsort(-values, kind="stable")
    return values[order], canonical_signs(vectors[:, order])


def _sample_covariance(data: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """列均值与最大似然样本协方差（除以 N）"""
    mean = data.mean(axis=0)
    centered = data - mean
    return mean, symmetrize(centered.T @ centered / data.shape[0])


def covariance_spectrum(data) -> np.ndarray:
    """样本协方差的特征值（降序，负的舍入误差截断为 0）"""
    data = require_finite(as_matrix(data, name="data"), "data")
    if data.shape[0] < 2:
        raise ValidationException(f"样本数至少为 2，实际为 {data.shape[0]}")
    _, covariance = _sample_covariance(data)
    eigenvalues, _ = _sorted_eigh(covariance)
    return np.maximum(eigenvalues, 0.0)


def fit_ppca(data, latent_dim: int) -> Tuple[FactorModel, FitDiagnostics]:
    """
    PPCA 闭式最大似然拟合

    Args:
        data: N × D 完整数据矩阵
        latent_dim: 隐变量维数 K，1 ≤ K < D

    Returns:
        (FactorModel, FitDiagnostics)

    Raises:
        ValidationException: N < 2 或 K 越界
        NonFiniteInputException: 数据包含非有限值
        DegenerateDataException: 正特征值少于 K 个，或残差方差为 0
    """
    data = require_finite(as_matrix(data, name="data"), "data")
    n, d = data.shape
    k = int(latent_dim)
    if n < 2:
        raise ValidationException(f"样本数至少为 2，实际为 {n}")
    if not 1 <= k < d:
        raise ValidationException(f"隐变量维数需满足 1 ≤ K < D，实际 K={k}, D={d}")

    mean, covariance = _sample_covariance(data)
    eigenvalues, eigenvectors = _sorted_eigh(covariance)

    negative = int(np.sum(eigenvalues < 0))
    if negative:
        logger.warning(f"样本协方差有 {negative} 个负特征值（舍入误差），已截断为 0")
        eigenvalues = np.maximum(eigenvalues, 0.0)

    scale = eigenvalues[0] if eigenvalues[0] > 0 else 1.0
    positive = int(np.sum(eigenvalues > scale * 1e-12))
    if positive < k:
        raise DegenerateDataException(
            f"样本协方差只有 {positive} 个正特征值，少于 K={k}"
        )

    sigma2 = float(np.mean(eigenvalues[k:]))
    if sigma2 <= scale * 1e-12:
        raise DegenerateDataException("残差方差 σ² 为 0，数据秩不超过 K")

    gaps = eigenvalues[:k] - sigma2
    clamped = int(np.sum(gaps < 0))
    if clamped:
        logger.warning(f"{clamped} 个分量的 λ_i − σ² 为负，已截断为 0")
    loading = eigenvectors[:, :k] * np.sqrt(np.maximum(gaps, 0.0))

    total = float(np.sum(eigenvalues))
    explained = float(np.sum(eigenvalues[:k]) / total) if total > 0 else 0.0

    model = FactorModel(loading=loading, mean=mean, noise_diag=np.full(d, sigma2))
    diagnostics = FitDiagnostics(
        eigenvalues=eigenvalues,
        sigma2=sigma2,
        explained_fraction=explained,
        n_samples=n,
        clamped_components=clamped,
        clamped_eigenvalues=negative,
    )
    logger.info(f"✓ PPCA 拟合完成: N={n}, D={d}, K={k}, σ²={sigma2:.6g}, 解释方差={explained:.4f}")
    return model, diagnostics


def select_latent_dim(eigenvalues, target_fraction: float) -> int:
    """
    选择累计解释方差达到目标比例的最小 K

    Args:
        eigenvalues: 非负、降序的特征值
        target_fraction: 目标比例，0 < t ≤ 1

    Returns:
        最小的 K，使 (Σ_{i≤K} λ_i)/(Σ_i λ_i) ≥ target_fraction
    """
    values = as_vector(eigenvalues, name="eigenvalues")
    if values.size == 0:
        raise ValidationException("特征值为空")
    if not 0 < target_fraction <= 1:
        raise ValidationException(f"目标比例需在 (0, 1] 内，实际为 {target_fraction}")
    if np.any(values < 0) or np.any(np.diff(values) > 0):
        raise ValidationException("特征值必须非负且降序")

    cumulative = np.cumsum(values)
    total = cumulative[-1]
    if total <= 0:
        raise DegenerateDataException("特征值全为 0，无法选择 K")
    fractions = cumulative / total
    return int(np.argmax(fractions >= target_fraction)) + 1


def sample(model: FactorModel, count: int, seed: int) -> np.ndarray:
    """
    从生成模型采样

    每行 x = W z + μ + ε，z ~ N(0, I_K)，ε ~ N(0, Ψ)；给定种子结果确定。
    """
    count = int(count)
    if count < 0:
        raise ValidationException(f"采样数不能为负: {count}")
    rng = make_rng(seed, STREAM_SAMPLE)
    latent = rng.standard_normal((count, model.K))
    noise = rng.standard_normal((count, model.D)) * np.sqrt(model.noise_diag)
    return latent @ model.loading.T + model.mean + noise


def random_ppca_model(dim: int, latent_dim: int, seed: int = 0, noise_variance: float = 0.004,
                      signal_variance: float = 0.04) -> FactorModel:
    """
    随机构造 PPCA 模型（模型匹配数据实验使用）

    载荷方向为随机正交方向，覆盖全部像素；第 i 个分量的方差按 1/(i+1) 衰减，
    总信号方差为 dim·signal_variance。
    """
    if not 1 <= latent_dim < dim:
        raise ValidationException(f"隐变量维数需满足 1 ≤ K < D，实际 K={latent_dim}, D={dim}")
    rng = make_rng(seed, STREAM_MODEL)
    directions, _ = np.linalg.qr(rng.standard_normal((dim, latent_dim)))
    weights = 1.0 / np.arange(1, latent_dim + 1)
    variances = dim * signal_variance * weights / weights.sum()
    return FactorModel(
        loading=directions * np.sqrt(variances),
        mean=np.zeros(dim),
        noise_diag=np.full(dim, noise_variance),
    )


def rotate_to_diagonal(model: FactorModel) -> Tuple[FactorModel, np.ndarray]:
    """
    因子旋转：使完整数据的后验协方差为对角阵

    Σ_{z|x} = UΛUᵀ，W̃ = WU。U 的列按 Λ 降序排列并按符号规则固定。

    Returns:
        (旋转后的模型, K × K 正交矩阵 U)
    """
    # Σ 与 P 共享特征向量，Σ 的降序即 P 的升序
    try:
        precision_values, vectors = np.linalg.eigh(model.full_precision)
    except np.linalg.LinAlgError as e:
        raise NumericalException(f"特征分解失败: {e}") from e
    order = np.argsort(-1.0 / precision_values, kind="stable")
    rotation = canonical_signs(vectors[:, order])

    rotated = FactorModel(
        loading=model.loading @ rotation,
        mean=model.mean,
        noise_diag=model.noise_diag,
    )
    logger.debug(f"因子旋转完成: K={model.K}")
    return rotated, rotation
