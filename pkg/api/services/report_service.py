"""
报告服务层 - 把报告 CSV 渲染为对齐的文本表格

数值在显示时乘以 10²，CSV 中保持原始尺度。
"""
import logging
from typing import List, Optional

import pandas as pd

from api.repositories import ArtifactRepository
from models.imputation import METHODS

logger = logging.getLogger(__name__)

DISPLAY_SCALE = 100.0


def format_cell(mean_error: float, std_error: float, scale: float = DISPLAY_SCALE) -> str:
    return f"{mean_error * scale:.4f} ± {std_error * scale:.4f}"


class ReportService:
    """报告服务"""

    def __init__(self, repository: Optional[ArtifactRepository] = None):
        self.repository = repository or ArtifactRepository()

    def render(self, path: str) -> str:
        """读取报告 CSV 并返回表格文本"""
        return render_table(self.repository.load_report(path))


def render_table(frame: pd.DataFrame, scale: float = DISPLAY_SCALE) -> str:
    """
    每行一个 (mask_kind, split)，每列一个方法

    方法列按报告顺序排列，缺少的组合显示为 '-'。
    """
    methods = [m for m in METHODS if m in set(frame["method"])]
    methods += sorted(set(frame["method"]) - set(methods))

    cells = {
        (row.mask_kind, row.split, row.method): format_cell(row.mean_error, row.std_error, scale)
        for row in frame.itertuples(index=False)
    }
    keys: List[tuple] = list(dict.fromkeys(zip(frame["mask_kind"], frame["split"])))

    header = ["mask", "split"] + methods
    body = [[kind, split] + [cells.get((kind, split, m), "-") for m in methods] for kind, split in keys]
    widths = [max(len(str(r[i])) for r in [header] + body) for i in range(len(header))]

    def line(values):
        return "  ".join(str(v).ljust(w) for v, w in zip(values, widths)).rstrip()

    rule = "  ".join("-" * w for w in widths)
    unit = "×10²" if scale == DISPLAY_SCALE else f"×{scale:g}"
    lines = [f"均方填补误差 ({unit})", line(header), rule]
    lines += [line(r) for r in body]
    logger.debug(f"报告表格: {len(body)} 行, {len(methods)} 个方法")
    return "\n".join(lines)
