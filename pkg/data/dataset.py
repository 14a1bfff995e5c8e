"""
数据集 - 读取、缩放、划分

支持的格式：
- csv：逗号分隔的数值矩阵（默认无表头）
- raw-u8：连续存放的 8 位灰度帧，每帧 width × height 字节，按行存储
- mat：MATLAB 文件（Frey 人脸 frey_rawface.mat，变量 ff 为 D × N，每列一帧）
"""
import logging
import os
from dataclasses import dataclass, field, replace
from typing import Optional, Tuple

import numpy as np
import pandas as pd

from api.exceptions import (
    DataLoadException,
    DegenerateDataException,
    DimensionMismatchException,
    ValidationException,
)
from models.base import BaseModel, as_matrix, frozen_array, require_finite
from models.rng import STREAM_SPLIT, make_rng

logger = logging.getLogger(__name__)

FORMATS = ("csv", "raw-u8", "mat")
SPLIT_TRAIN = "train"
SPLIT_TEST = "test"


@dataclass(frozen=True, repr=False)
class Dataset(BaseModel):
    """N × D 数据矩阵，可选图像尺寸与每行的划分标签"""

    values: np.ndarray
    image_shape: Optional[Tuple[int, int]] = None   # (width, height)
    split_tags: Optional[np.ndarray] = None         # 每行 'train' / 'test'

    def __post_init__(self):
        values = require_finite(as_matrix(self.values, name="values"), "values")
        if self.image_shape is not None:
            width, height = self.image_shape
            if width * height != values.shape[1]:
                raise DimensionMismatchException(
                    f"图像尺寸 {width}×{height} 与维数 D={values.shape[1]} 不符"
                )
            object.__setattr__(self, "image_shape", (int(width), int(height)))
        object.__setattr__(self, "values", frozen_array(values))
        if self.split_tags is not None:
            tags = np.asarray(self.split_tags, dtype=str)
            if tags.shape != (values.shape[0],):
                raise DimensionMismatchException("划分标签数与行数不符")
            object.__setattr__(self, "split_tags", frozen_array(tags, dtype=str))

    @property
    def N(self) -> int:
        return self.values.shape[0]

    @property
    def D(self) -> int:
        return self.values.shape[1]

    def rows(self, split: str) -> np.ndarray:
        """某个划分的行"""
        if self.split_tags is None:
            raise ValidationException("数据集尚未划分")
        return self.values[self.split_tags == split]

    @property
    def train(self) -> np.ndarray:
        return self.rows(SPLIT_TRAIN)

    @property
    def test(self) -> np.ndarray:
        return self.rows(SPLIT_TEST)


@dataclass(frozen=True)
class RescaleParams:
    """全局仿射缩放参数：min → low，max → high"""

    data_min: float
    data_max: float
    low: float = -1.0
    high: float = 1.0

    def apply(self, values: np.ndarray) -> np.ndarray:
        span = self.data_max - self.data_min
        return (np.asarray(values, dtype=float) - self.data_min) / span * (self.high - self.low) + self.low

    def invert(self, values: np.ndarray) -> np.ndarray:
        span = self.data_max - self.data_min
        return (np.asarray(values, dtype=float) - self.low) / (self.high - self.low) * span + self.data_min

    def to_array(self) -> np.ndarray:
        return np.array([self.data_min, self.data_max, self.low, self.high])

    @classmethod
    def from_array(cls, values) -> "RescaleParams":
        data_min, data_max, low, high = (float(v) for v in values)
        return cls(data_min, data_max, low, high)


def _load_csv(path: str, header: bool) -> np.ndarray:
    try:
        frame = pd.read_csv(path, header=0 if header else None, skip_blank_lines=True)
    except pd.errors.EmptyDataError as e:
        raise DataLoadException(f"文件为空: {path}") from e
    except pd.errors.ParserError as e:
        raise DataLoadException(f"CSV 行宽不一致: {path} ({e})") from e
    if frame.empty:
        raise DataLoadException(f"文件为空: {path}")
    try:
        values = frame.apply(pd.to_numeric, errors="raise").to_numpy(dtype=float)
    except (ValueError, TypeError) as e:
        raise DataLoadException(f"CSV 包含非数值单元格: {path} ({e})") from e
    if np.isnan(values).any():
        raise DataLoadException(f"CSV 行宽不一致或存在空单元格: {path}")
    return values


def _load_raw_frames(path: str, width: int, height: int) -> np.ndarray:
    if not width or not height:
        raise ValidationException("raw-u8 格式需要 width 和 height")
    raw = np.fromfile(path, dtype=np.uint8)
    frame_size = width * height
    if raw.size == 0:
        raise DataLoadException(f"文件为空: {path}")
    if raw.size % frame_size:
        raise DataLoadException(
            f"文件大小 {raw.size} 不是帧大小 {width}×{height}={frame_size} 的整数倍"
        )
    return raw.reshape(-1, frame_size).astype(float)


def _load_mat(path: str, variable: str) -> np.ndarray:
    from scipy.io import loadmat

    try:
        contents = loadmat(path)
    except (ValueError, OSError, NotImplementedError) as e:
        raise DataLoadException(f"无法读取 MAT 文件: {path} ({e})") from e
    if variable not in contents:
        raise DataLoadException(f"MAT 文件中没有变量 {variable}: {path}")
    # 每列一帧；MATLAB 列优先的 width × height 转置后即按行存储
    values = np.asarray(contents[variable], dtype=float).T
    if values.size == 0:
        raise DataLoadException(f"文件为空: {path}")
    return values


def load_matrix(path: str, fmt: str = "csv", width: Optional[int] = None,
                height: Optional[int] = None, header: bool = False,
                mat_variable: str = "ff") -> Dataset:
    """
    读取数据矩阵

    Args:
        path: 文件路径
        fmt: 'csv'、'raw-u8' 或 'mat'
        width, height: 图像尺寸（raw-u8 必需，其他格式可选）
        header: CSV 是否有表头

    Returns:
        Dataset
    """
    if fmt not in FORMATS:
        raise ValidationException(f"未知数据格式: {fmt}，可选 {FORMATS}")
    if not os.path.isfile(path):
        raise DataLoadException(f"文件不存在: {path}", status_code=404)

    logger.info(f"读取数据: {path} (format={fmt})")
    if fmt == "csv":
        values = _load_csv(path, header)
    elif fmt == "raw-u8":
        values = _load_raw_frames(path, width, height)
    else:
        values = _load_mat(path, mat_variable)

    image_shape = (width, height) if width and height else None
    dataset = Dataset(values=values, image_shape=image_shape)
    logger.info(f"✓ 数据读取完成: N={dataset.N}, D={dataset.D}")
    return dataset


def rescale_to_unit_interval(dataset: Dataset, low: float = -1.0,
                             high: float = 1.0) -> Tuple[Dataset, RescaleParams]:
    """把整个矩阵的全局最小值映射到 low、最大值映射到 high"""
    if not low < high:
        raise ValidationException(f"需要 low < high，实际 [{low}, {high}]")
    data_min = float(dataset.values.min())
    data_max = float(dataset.values.max())
    if not data_max > data_min:
        raise DegenerateDataException("数据为常数，无法缩放")
    params = RescaleParams(data_min, data_max, low, high)
    return replace(dataset, values=params.apply(dataset.values)), params


def split(dataset: Dataset, train_fraction: float = 0.8, seed: int = 0) -> Dataset:
    """随机选取 floor(fraction·N) 行作为训练集，其余为测试集"""
    if not 0 < train_fraction < 1:
        raise ValidationException(f"训练比例需在 (0, 1) 内，实际为 {train_fraction}")
    if dataset.N < 2:
        raise ValidationException(f"至少需要 2 行数据，实际为 {dataset.N}")
    n_train = int(np.floor(train_fraction * dataset.N))
    order = make_rng(seed, STREAM_SPLIT).permutation(dataset.N)
    tags = np.full(dataset.N, SPLIT_TEST, dtype=object)
    tags[order[:n_train]] = SPLIT_TRAIN
    logger.info(f"数据划分: 训练 {n_train} 行, 测试 {dataset.N - n_train} 行 (seed={seed})")
    return replace(dataset, split_tags=tags.astype(str))
