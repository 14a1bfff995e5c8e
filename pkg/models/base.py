"""
模型基类 - 所有数据模型的父类，以及数组校验工具
"""
from dataclasses import fields
from typing import Dict, Any, Optional

import numpy as np

from api.exceptions import DimensionMismatchException, NonFiniteInputException


class BaseModel:
    """基础模型类（与 dataclass 配合使用）"""

    def to_dict(self) -> Dict[str, Any]:
        """转换为字典"""
        return {
            f.name: getattr(self, f.name) for f in fields(self)
            if not f.name.startswith('_')
        }

    def to_json(self) -> Dict[str, Any]:
        """转换为 JSON 序列化的字典"""
        data = self.to_dict()
        # 处理 numpy 对象
        for key, value in data.items():
            if isinstance(value, np.ndarray):
                data[key] = value.tolist()
            elif isinstance(value, np.generic):
                data[key] = value.item()
        return data

    def __repr__(self) -> str:
        shapes = ", ".join(
            f"{k}={v.shape}" if isinstance(v, np.ndarray) else f"{k}={v!r}"
            for k, v in self.to_dict().items()
        )
        return f"<{type(self).__name__} {shapes}>"


def frozen_array(values, dtype=float) -> np.ndarray:
    """复制为只读数组"""
    arr = np.array(values, dtype=dtype, copy=True)
    arr.setflags(write=False)
    return arr


def as_vector(values, length: Optional[int] = None, name: str = "vector") -> np.ndarray:
    """转换为一维浮点数组并检查长度"""
    arr = np.asarray(values, dtype=float)
    if arr.ndim != 1:
        raise DimensionMismatchException(f"{name} 应为一维向量，实际形状 {arr.shape}")
    if length is not None and arr.shape[0] != length:
        raise DimensionMismatchException(f"{name} 长度应为 {length}，实际为 {arr.shape[0]}")
    return arr


def as_matrix(values, columns: Optional[int] = None, name: str = "matrix") -> np.ndarray:
    """转换为二维浮点数组并检查列数"""
    arr = np.asarray(values, dtype=float)
    if arr.ndim != 2:
        raise DimensionMismatchException(f"{name} 应为二维矩阵，实际形状 {arr.shape}")
    if columns is not None and arr.shape[1] != columns:
        raise DimensionMismatchException(f"{name} 列数应为 {columns}，实际为 {arr.shape[1]}")
    return arr


def require_finite(arr: np.ndarray, name: str = "input") -> np.ndarray:
    """要求数组全部为有限值"""
    if not np.all(np.isfinite(arr)):
        raise NonFiniteInputException(f"{name} 包含 NaN 或 inf")
    return arr


def symmetrize(matrix: np.ndarray) -> np.ndarray:
    """(A + Aᵀ)/2"""
    return 0.5 * (matrix + matrix.T)
