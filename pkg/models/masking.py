"""
缺失机制 - 由种子确定性地生成缺失模式

两种机制：
- random(p)：每一维独立地以概率 p 缺失
- quarters：每个样本缺失图像四个象限之一（按行存储，行 = 图像行）
"""
import logging
from dataclasses import dataclass
from typing import Iterator, List, Optional

import numpy as np

from api.exceptions import DimensionMismatchException, ValidationException
from models.inference import Mask
from models.rng import STREAM_QUARTERS, STREAM_RANDOM_MASK, child_rng, make_rng

logger = logging.getLogger(__name__)

QUARTER_NAMES = ("TL", "TR", "BL", "BR")
QUARTERS_MODES = ("cycle", "uniform")


def random_mask(dim: int, p: float, rng: np.random.Generator) -> Mask:
    """每一维独立地以概率 p 缺失"""
    if not 0 <= p <= 1:
        raise ValidationException(f"缺失概率需在 [0, 1] 内，实际为 {p}")
    missing = rng.random(int(dim)) < p
    return Mask(~missing)


def _check_image_shape(width: int, height: int):
    if width < 2 or height < 2:
        raise ValidationException(f"图像宽高至少为 2，实际为 {width}×{height}")


def quarter_grid(width: int, height: int, quarter: int) -> np.ndarray:
    """
    象限的缺失区域（height × width 布尔矩阵，True 表示缺失）

    上/左半部分取 floor(height/2)、floor(width/2)。
    """
    _check_image_shape(width, height)
    if quarter not in range(4):
        raise ValidationException(f"象限编号需为 0..3，实际为 {quarter}")
    half_row, half_col = height // 2, width // 2
    rows = slice(0, half_row) if quarter in (0, 1) else slice(half_row, height)
    cols = slice(0, half_col) if quarter in (0, 2) else slice(half_col, width)
    grid = np.zeros((height, width), dtype=bool)
    grid[rows, cols] = True
    return grid


def quarters_mask(width: int, height: int, quarter: int) -> Mask:
    """缺失一个象限的 Mask：0=左上，1=右上，2=左下，3=右下"""
    return Mask(~quarter_grid(width, height, quarter).ravel())


def row_reveal_masks(width: int, height: int) -> Iterator[Mask]:
    """逐行揭示的嵌套 Mask 序列：第 r 步观测前 r 行（r = 0..height）"""
    _check_image_shape(width, height)
    for rows in range(height + 1):
        observed = np.zeros((height, width), dtype=bool)
        observed[:rows, :] = True
        yield Mask(observed.ravel())


@dataclass(frozen=True)
class MaskGenerator:
    """
    带种子的缺失模式生成器

    kind 为 'random' 时使用 p；为 'quarters' 时使用 width/height/mode。
    同一种子总是产生相同的序列。
    """

    kind: str
    seed: int = 0
    p: float = 0.5
    width: int = 0
    height: int = 0
    mode: str = "uniform"

    def __post_init__(self):
        if self.kind == "random":
            if not 0 <= self.p <= 1:
                raise ValidationException(f"缺失概率需在 [0, 1] 内，实际为 {self.p}")
        elif self.kind == "quarters":
            _check_image_shape(self.width, self.height)
            if self.mode not in QUARTERS_MODES:
                raise ValidationException(f"quarters 模式需为 {QUARTERS_MODES}，实际为 {self.mode}")
        else:
            raise ValidationException(f"未知缺失机制: {self.kind}")

    @classmethod
    def random(cls, p: float, seed: int = 0) -> "MaskGenerator":
        return cls(kind="random", seed=seed, p=p)

    @classmethod
    def quarters(cls, width: int, height: int, mode: str = "uniform", seed: int = 0) -> "MaskGenerator":
        return cls(kind="quarters", seed=seed, width=width, height=height, mode=mode)

    @property
    def label(self) -> str:
        """报告中使用的短标签"""
        return "R" if self.kind == "random" else "Q"

    def with_seed(self, seed: int) -> "MaskGenerator":
        return MaskGenerator(self.kind, seed, self.p, self.width, self.height, self.mode)

    def _rng(self, stream: int, index: Optional[int]) -> np.random.Generator:
        if index is None:
            return make_rng(self.seed, stream)
        return child_rng(self.seed, stream, index)

    def quarter_indices(self, count: int, index: Optional[int] = None) -> np.ndarray:
        """每个样本缺失的象限编号"""
        if self.kind != "quarters":
            raise ValidationException("只有 quarters 机制有象限编号")
        if self.mode == "cycle":
            return np.arange(count) % 4
        return self._rng(STREAM_QUARTERS, index).integers(0, 4, size=count)

    def generate(self, count: int, dim: int, index: Optional[int] = None) -> np.ndarray:
        """
        生成 count 个缺失模式

        Args:
            count: 样本数
            dim: 维数 D
            index: 子流编号（None 为根流），用于不同数据划分互不相关的序列

        Returns:
            count × dim 布尔矩阵，True 表示观测到
        """
        if self.kind == "random":
            rng = self._rng(STREAM_RANDOM_MASK, index)
            observed = ~(rng.random((count, dim)) < self.p)
        else:
            if self.width * self.height != dim:
                raise DimensionMismatchException(
                    f"图像尺寸 {self.width}×{self.height} 与维数 D={dim} 不符"
                )
            grids = [~quarter_grid(self.width, self.height, q).ravel() for q in range(4)]
            observed = np.zeros((count, dim), dtype=bool)
            for row, quarter in enumerate(self.quarter_indices(count, index)):
                observed[row] = grids[quarter]
        logger.debug(f"生成 {count} 个缺失模式: kind={self.kind}, seed={self.seed}")
        return observed

    def mask_for(self, example: int, dim: int) -> Mask:
        """第 example 个样本的缺失模式（cycle 模式下为象限 example mod 4）"""
        if self.kind == "quarters" and self.mode == "cycle":
            if self.width * self.height != dim:
                raise DimensionMismatchException(
                    f"图像尺寸 {self.width}×{self.height} 与维数 D={dim} 不符"
                )
            return quarters_mask(self.width, self.height, int(example) % 4)
        return Mask(self.generate(1, dim, index=int(example))[0])

    def masks(self, count: int, dim: int) -> List[Mask]:
        """以 Mask 列表形式返回 generate 的结果"""
        return [Mask(row) for row in self.generate(count, dim)]
