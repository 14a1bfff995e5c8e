"""
共享的工具函数 - 图像拼接与方法名称
"""
import logging
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from models.imputation import METHOD_TITLES, METHODS

logger = logging.getLogger(__name__)

# 拼图中面板之间的间隔（像素）
PANEL_GAP = 1


def vector_to_image(vector: np.ndarray, width: int, height: int) -> np.ndarray:
    """按行存储的长度 D 向量 → height × width 图像"""
    return np.asarray(vector).reshape(height, width)


def tile_panels(rows: Sequence[Sequence[np.ndarray]], gap: int = PANEL_GAP, fill: int = 0) -> np.ndarray:
    """
    把若干行面板拼成一张图

    Args:
        rows: 每行一组同尺寸的 uint8 面板
        gap: 面板间隔
        fill: 间隔与空位的灰度

    Returns:
        拼接后的 uint8 图像
    """
    if not rows or not rows[0]:
        raise ValueError("没有可拼接的面板")
    height, width = rows[0][0].shape
    n_cols = max(len(r) for r in rows)
    canvas = np.full(
        (len(rows) * (height + gap) - gap, n_cols * (width + gap) - gap),
        fill,
        dtype=np.uint8,
    )
    for i, panels in enumerate(rows):
        for j, panel in enumerate(panels):
            top, left = i * (height + gap), j * (width + gap)
            canvas[top:top + height, left:left + width] = panel
    return canvas


def get_all_methods() -> List[Dict]:
    """获取所有填补方法列表"""
    return [{"id": m, "name": METHOD_TITLES[m]} for m in METHODS]


def value_range(values: np.ndarray, fallback: Tuple[float, float] = (-1.0, 1.0),
                low: Optional[float] = None, high: Optional[float] = None) -> Tuple[float, float]:
    """灰度映射范围：优先使用给定的 low/high，否则取数据范围"""
    if low is not None and high is not None and high > low:
        return low, high
    vmin, vmax = float(np.min(values)), float(np.max(values))
    if vmax > vmin:
        return vmin, vmax
    return fallback
