"""
模型服务层 - 读取数据、拟合 PPCA 模型、从模型采样
"""
import logging
from typing import Any, Dict, Optional, Tuple

import numpy as np

from api.exceptions import ValidationException
from api.repositories import ArtifactRepository
from api.services.config_service import ExperimentConfig
from config import Config
from data.dataset import Dataset, RescaleParams, rescale_to_unit_interval, split
from models.factor_model import (
    FactorModel,
    FitDiagnostics,
    covariance_spectrum,
    fit_ppca,
    random_ppca_model,
    sample,
    select_latent_dim,
)

logger = logging.getLogger(__name__)

# 没有数据时随机模型的默认尺寸
DEFAULT_RANDOM_LATENT_DIM = 43


class ModelService:
    """模型服务 - 拟合、读取与采样"""

    def __init__(self, repository: Optional[ArtifactRepository] = None):
        self.repository = repository or ArtifactRepository()

    def load_dataset(self, config: ExperimentConfig) -> Tuple[Dataset, Optional[RescaleParams]]:
        """读取、缩放并划分数据集"""
        if not config.data:
            raise ValidationException("需要 --data 指定数据文件")
        dataset = self.repository.load_dataset(
            config.data, config.format, width=config.width, height=config.height, header=config.header,
        )
        rescale = None
        if config.rescale:
            dataset, rescale = rescale_to_unit_interval(dataset, Config.RESCALE_LOW, Config.RESCALE_HIGH)
        dataset = split(dataset, config.train_fraction, seed=config.seed_split)
        return dataset, rescale

    @staticmethod
    def choose_latent_dim(config: ExperimentConfig, train: np.ndarray) -> int:
        """显式给出的 K，否则按解释方差比例选择"""
        d = train.shape[1]
        if config.latent_dim is not None:
            k = int(config.latent_dim)
        else:
            target = config.explained if config.explained is not None else Config.EXPLAINED_FRACTION
            k = select_latent_dim(covariance_spectrum(train), float(target))
            logger.info(f"按解释方差 {target} 选择 K={k}")
        if k >= d:
            raise ValidationException(f"隐变量维数需小于 D，实际 K={k}, D={d}")
        return k

    def fit(self, config: ExperimentConfig, dataset: Optional[Dataset] = None,
            rescale: Optional[RescaleParams] = None) -> Dict[str, Any]:
        """
        在训练集上拟合 PPCA 并写出模型文件

        Returns:
            包含模型、诊断、缩放参数、数据集与输出路径的字典
        """
        if dataset is None:
            dataset, rescale = self.load_dataset(config)
        train = dataset.train
        k = self.choose_latent_dim(config, train)
        model, diagnostics = fit_ppca(train, k)

        path = config.model_path
        self.repository.save_model(path, model, diagnostics, rescale, dataset.image_shape)
        logger.info(f"✓ 拟合完成: K={model.K}, 解释方差={diagnostics.explained_fraction:.4f}")
        return {
            "model": model,
            "diagnostics": diagnostics,
            "rescale": rescale,
            "dataset": dataset,
            "path": path,
        }

    def load(self, config: ExperimentConfig):
        """读取 config 指定的模型文件：(模型, 诊断, 缩放参数, 图像尺寸)"""
        return self.repository.load_model(config.model_path)

    def random_model(self, config: ExperimentConfig) -> FactorModel:
        """没有数据文件时的随机模型"""
        width = config.width or Config.IMAGE_WIDTH
        height = config.height or Config.IMAGE_HEIGHT
        k = int(config.latent_dim or DEFAULT_RANDOM_LATENT_DIM)
        logger.info(f"构造随机 PPCA 模型: D={width * height}, K={k}, seed={config.seed_sampling}")
        return random_ppca_model(width * height, k, seed=config.seed_sampling)

    def sample(self, config: ExperimentConfig, count: Optional[int] = None,
               out_path: Optional[str] = None) -> np.ndarray:
        """从模型采样 count 行并写出 CSV"""
        model, _, _, _ = self.load(config)
        count = config.count if count is None else int(count)
        values = sample(model, count, seed=config.seed_sampling)
        path = out_path or self.repository.path("samples.csv")
        self.repository.save_matrix(path, values)
        return values

    @staticmethod
    def describe(model: FactorModel, diagnostics: Optional[FitDiagnostics] = None,
                 image_shape=None) -> Dict[str, Any]:
        """模型概要（HTTP /model 与 CLI 输出使用）"""
        info: Dict[str, Any] = {
            "D": model.D,
            "K": model.K,
            "isotropic": model.is_isotropic,
            "image_shape": list(image_shape) if image_shape else None,
        }
        if diagnostics is not None:
            info.update({
                "sigma2": diagnostics.sigma2,
                "explained_fraction": diagnostics.explained_fraction,
                "n_samples": diagnostics.n_samples,
                "degenerate": diagnostics.degenerate,
            })
        return info
