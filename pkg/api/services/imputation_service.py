"""
填补服务层 - 单个样本的后验推断与填补（CLI impute 与 HTTP 接口共用）
"""
import logging
from typing import Any, Dict, Optional, Sequence

import numpy as np

from api.exceptions import DimensionMismatchException, ValidationException
from api.repositories import ArtifactRepository
from data.param_validator import ExperimentParamValidator
from models.factor_model import FactorModel
from models.imputation import ENCODER_METHODS, impute, posterior_for
from models.inference import DenoisingEncoder, GaussianPosterior, Mask

logger = logging.getLogger(__name__)


def _posterior_dict(posterior: GaussianPosterior) -> Dict[str, Any]:
    return {
        "method": posterior.method,
        "mean": posterior.mean.tolist(),
        "covariance": posterior.covariance.tolist(),
        "log_det_covariance": posterior.log_det_covariance(),
        "surrogate_covariance": posterior.surrogate_covariance,
    }


class ImputationService:
    """填补服务 - 对已加载的模型做单样本推断"""

    def __init__(self, model_path: str, encoder_path: Optional[str] = None,
                 repository: Optional[ArtifactRepository] = None):
        self.repository = repository or ArtifactRepository()
        self.model_path = model_path
        self.encoder_path = encoder_path or None

    @property
    def model(self) -> FactorModel:
        return self.repository.load_model(self.model_path)[0]

    def encoder(self, method: str) -> Optional[DenoisingEncoder]:
        if method not in ENCODER_METHODS:
            return None
        if not self.encoder_path:
            raise ValidationException(f"方法 {method} 需要去噪编码器文件（--encoder）")
        return self.repository.load_encoder(self.encoder_path)

    def _parse(self, x: Sequence[float], observed: Sequence) -> tuple:
        model = self.model
        x = np.asarray(x, dtype=float)
        if x.ndim != 1 or x.shape[0] != model.D:
            raise DimensionMismatchException(f"输入长度 {x.shape} 与模型维数 D={model.D} 不符")
        if isinstance(observed, str):
            mask = Mask.from_bits(observed)
        else:
            mask = Mask(np.asarray(observed, dtype=int).astype(bool))
        mask.check_dim(model.D)
        # 缺失位置的输入值不参与计算，允许为 NaN
        x = np.where(mask.observed, x, 0.0)
        return model, x, mask

    def impute(self, x: Sequence[float], observed: Sequence, method: str = "exact") -> Dict[str, Any]:
        """
        填补单个样本

        Args:
            x: 长度 D 的输入（模型空间），缺失位置可为任意值
            observed: 0/1 列表或位串，1 表示观测到
            method: 填补方法

        Returns:
            completed、predictive_std 与隐变量后验
        """
        method = ExperimentParamValidator.validate_method(method)
        model, x, mask = self._parse(x, observed)
        result = impute(method, model, self.encoder(method), x, mask)
        logger.info(f"✓ 单样本填补完成: method={method}, 缺失 {mask.n_missing}/{mask.D}")
        return {
            "method": method,
            "completed": result.completed.tolist(),
            "predictive_std": result.predictive_std.tolist(),
            "n_missing": mask.n_missing,
            "posterior": _posterior_dict(result.posterior) if result.posterior is not None else None,
        }

    def posterior(self, x: Sequence[float], observed: Sequence, method: str = "exact") -> Dict[str, Any]:
        """只返回隐变量后验（mean 方法没有后验）"""
        method = ExperimentParamValidator.validate_method(method)
        if method == "mean":
            raise ValidationException("mean 方法没有隐变量后验")
        model, x, mask = self._parse(x, observed)
        return _posterior_dict(posterior_for(method, model, self.encoder(method), x, mask))
