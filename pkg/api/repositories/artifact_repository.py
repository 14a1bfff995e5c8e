"""
实验产物数据访问层 - 处理模型、编码器、数据集、报告与图像文件的读写
"""
import logging
import os
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from data import formats
from data.dataset import Dataset, RescaleParams, load_matrix
from models.factor_model import FactorModel, FitDiagnostics
from models.imputation import ImputationReport
from models.inference import DenoisingEncoder, Mask

logger = logging.getLogger(__name__)


class ArtifactRepository:
    """实验产物数据访问层"""

    def __init__(self, output_dir: str = "output"):
        """
        初始化仓库

        Args:
            output_dir: 产物输出目录
        """
        self.output_dir = output_dir
        # 已读取的模型按路径缓存（内存）
        self._model_cache: Dict[str, tuple] = {}
        self._encoder_cache: Dict[str, DenoisingEncoder] = {}

    def path(self, *parts: str) -> str:
        """输出目录下的路径"""
        return os.path.join(self.output_dir, *parts)

    # ==================== 数据集 ====================

    def load_dataset(self, path: str, fmt: str = "csv", width: Optional[int] = None,
                     height: Optional[int] = None, header: bool = False) -> Dataset:
        return load_matrix(path, fmt, width=width, height=height, header=header)

    def save_matrix(self, path: str, values: np.ndarray):
        formats.write_matrix_csv(path, values, header=True)
        logger.info(f"✓ 数据已写出: {path} ({values.shape[0]} 行)")

    # ==================== 模型与编码器 ====================

    def save_model(self, path: str, model: FactorModel, diagnostics: Optional[FitDiagnostics] = None,
                   rescale: Optional[RescaleParams] = None,
                   image_shape: Optional[Tuple[int, int]] = None):
        formats.save_model(path, model, diagnostics, rescale, image_shape)
        self._model_cache.pop(os.path.abspath(path), None)

    def load_model(self, path: str, use_cache: bool = True):
        """
        读取模型

        Returns:
            (模型, 诊断, 缩放参数, 图像尺寸)
        """
        key = os.path.abspath(path)
        if use_cache and key in self._model_cache:
            logger.debug(f"缓存命中 (内存): {key}")
            return self._model_cache[key]
        loaded = formats.load_model(path)
        self._model_cache[key] = loaded
        return loaded

    def save_encoder(self, path: str, encoder: DenoisingEncoder):
        formats.save_encoder(path, encoder)
        self._encoder_cache.pop(os.path.abspath(path), None)

    def load_encoder(self, path: str) -> DenoisingEncoder:
        key = os.path.abspath(path)
        if key not in self._encoder_cache:
            self._encoder_cache[key] = formats.load_encoder(path)
        return self._encoder_cache[key]

    # ==================== 报告与图像 ====================

    def save_report(self, path: str, reports: Sequence[ImputationReport]):
        formats.write_report_csv(path, reports)

    def load_report(self, path: str):
        return formats.read_report_csv(path)

    def save_masks(self, path: str, masks: Sequence[Mask]):
        formats.write_masks_csv(path, masks)
        logger.debug(f"缺失模式已写出: {path} ({len(masks)} 行)")

    def load_masks(self, path: str) -> List[Mask]:
        return formats.read_masks_csv(path)

    def save_image(self, path: str, image: np.ndarray):
        """写出 uint8 灰度图（PGM），图像写入串行进行"""
        formats.write_pgm(path, image)
