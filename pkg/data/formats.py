"""
文件格式 - 模型/编码器容器、CSV 报告、Mask 比特串与 PGM 图像

模型与编码器使用 numpy .npz 容器，带魔数与版本号，浮点数组按位无损往返。
"""
import logging
import os
from typing import List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from api.exceptions import DataLoadException, ModelFormatException, ValidationException
from data.dataset import RescaleParams
from models.factor_model import FactorModel, FitDiagnostics
from models.imputation import ImputationReport
from models.inference import DenoisingEncoder, Mask

logger = logging.getLogger(__name__)

MODEL_MAGIC = "FAMI-MODEL"
ENCODER_MAGIC = "FAMI-ENCODER"
FORMAT_VERSION = 1

REPORT_COLUMNS = ["method", "mask_kind", "split", "n_examples", "mean_error", "std_error"]
FLOAT_FORMAT = "%.17g"


def _ensure_parent(path: str):
    parent = os.path.dirname(os.path.abspath(path))
    os.makedirs(parent, exist_ok=True)


def _open_container(path: str, magic: str):
    if not os.path.isfile(path):
        raise DataLoadException(f"文件不存在: {path}", status_code=404)
    try:
        with np.load(path, allow_pickle=False) as npz:
            contents = {key: npz[key] for key in npz.files}
    except (ValueError, OSError) as e:
        raise ModelFormatException(f"无法解析容器文件: {path} ({e})") from e
    if "magic" not in contents or str(contents["magic"]) != magic:
        raise ModelFormatException(f"魔数不符，期望 {magic}: {path}")
    version = int(contents["format_version"]) if "format_version" in contents else -1
    if version != FORMAT_VERSION:
        raise ModelFormatException(f"不支持的格式版本 {version}（当前 {FORMAT_VERSION}）")
    return contents


# ==================== 模型容器 ====================

def save_model(path: str, model: FactorModel, diagnostics: Optional[FitDiagnostics] = None,
               rescale: Optional[RescaleParams] = None,
               image_shape: Optional[Tuple[int, int]] = None):
    """保存 FactorModel（及可选的拟合诊断、缩放参数、图像尺寸）"""
    payload = {
        "magic": np.array(MODEL_MAGIC),
        "format_version": np.array(FORMAT_VERSION),
        "D": np.array(model.D),
        "K": np.array(model.K),
        "loading": model.loading,
        "mean": model.mean,
        "noise_diag": model.noise_diag,
    }
    if diagnostics is not None:
        payload.update({
            "eigenvalues": diagnostics.eigenvalues,
            "sigma2": np.array(diagnostics.sigma2),
            "explained_fraction": np.array(diagnostics.explained_fraction),
            "n_samples": np.array(diagnostics.n_samples),
            "clamped_components": np.array(diagnostics.clamped_components),
            "clamped_eigenvalues": np.array(diagnostics.clamped_eigenvalues),
        })
    if rescale is not None:
        payload["rescale"] = rescale.to_array()
    if image_shape is not None:
        payload["image_shape"] = np.array(image_shape, dtype=np.int64)

    _ensure_parent(path)
    with open(path, "wb") as f:
        np.savez(f, **payload)
    logger.info(f"✓ 模型已保存: {path} (D={model.D}, K={model.K})")


def load_model(path: str) -> Tuple[FactorModel, Optional[FitDiagnostics], Optional[RescaleParams],
                                   Optional[Tuple[int, int]]]:
    """
    读取模型容器

    Returns:
        (模型, 诊断或 None, 缩放参数或 None, 图像尺寸或 None)
    """
    contents = _open_container(path, MODEL_MAGIC)
    model = FactorModel(
        loading=contents["loading"],
        mean=contents["mean"],
        noise_diag=contents["noise_diag"],
    )
    if (model.D, model.K) != (int(contents["D"]), int(contents["K"])):
        raise ModelFormatException(f"容器中的 D/K 与数组形状不符: {path}")

    diagnostics = None
    if "eigenvalues" in contents:
        diagnostics = FitDiagnostics(
            eigenvalues=contents["eigenvalues"],
            sigma2=float(contents["sigma2"]),
            explained_fraction=float(contents["explained_fraction"]),
            n_samples=int(contents["n_samples"]),
            clamped_components=int(contents["clamped_components"]),
            clamped_eigenvalues=int(contents["clamped_eigenvalues"]),
        )
    rescale = RescaleParams.from_array(contents["rescale"]) if "rescale" in contents else None
    image_shape = tuple(int(v) for v in contents["image_shape"]) if "image_shape" in contents else None
    logger.info(f"模型已读取: {path} (D={model.D}, K={model.K})")
    return model, diagnostics, rescale, image_shape


def save_encoder(path: str, encoder: DenoisingEncoder):
    """保存 DenoisingEncoder"""
    _ensure_parent(path)
    with open(path, "wb") as f:
        np.savez(
            f,
            magic=np.array(ENCODER_MAGIC),
            format_version=np.array(FORMAT_VERSION),
            weights=encoder.weights,
            bias=encoder.bias,
            training_mask_kind=np.array(encoder.training_mask_kind),
        )
    logger.info(f"✓ 编码器已保存: {path}")


def load_encoder(path: str) -> DenoisingEncoder:
    """读取 DenoisingEncoder"""
    contents = _open_container(path, ENCODER_MAGIC)
    return DenoisingEncoder(
        weights=contents["weights"],
        bias=contents["bias"],
        training_mask_kind=str(contents["training_mask_kind"]),
    )


# ==================== CSV ====================

def write_matrix_csv(path: str, values: np.ndarray, header: bool = True):
    """写出数值矩阵；N=0 时只有表头"""
    values = np.asarray(values, dtype=float)
    columns = [f"x{j}" for j in range(values.shape[1])]
    _ensure_parent(path)
    pd.DataFrame(values, columns=columns).to_csv(
        path, index=False, header=header, float_format=FLOAT_FORMAT
    )


def write_report_csv(path: str, reports: Sequence[ImputationReport]):
    """每个报告一行：method, mask_kind, split, n_examples, mean_error, std_error"""
    frame = pd.DataFrame([r.to_row() for r in reports], columns=REPORT_COLUMNS)
    _ensure_parent(path)
    frame.to_csv(path, index=False, float_format=FLOAT_FORMAT)
    logger.info(f"✓ 报告已写出: {path} ({len(frame)} 行)")


def read_report_csv(path: str) -> pd.DataFrame:
    """读取报告 CSV"""
    if not os.path.isfile(path):
        raise DataLoadException(f"文件不存在: {path}", status_code=404)
    try:
        frame = pd.read_csv(path, dtype={"method": str, "mask_kind": str, "split": str})
    except (pd.errors.EmptyDataError, pd.errors.ParserError) as e:
        raise DataLoadException(f"无法解析报告: {path} ({e})") from e
    missing = [c for c in REPORT_COLUMNS if c not in frame.columns]
    if missing:
        raise DataLoadException(f"报告缺少列 {missing}: {path}")
    return frame


def write_masks_csv(path: str, masks: Sequence[Mask]):
    """每行一个比特串（0=缺失，1=观测）"""
    _ensure_parent(path)
    pd.DataFrame({"mask": [m.to_bits() for m in masks]}).to_csv(path, index=False)


def read_masks_csv(path: str) -> List[Mask]:
    if not os.path.isfile(path):
        raise DataLoadException(f"文件不存在: {path}", status_code=404)
    frame = pd.read_csv(path, dtype={"mask": str})
    if "mask" not in frame.columns:
        raise DataLoadException(f"Mask 文件缺少 mask 列: {path}")
    return [Mask.from_bits(bits) for bits in frame["mask"]]


# ==================== PGM 图像 ====================

def to_gray(values: np.ndarray, low: float, high: float, maxval: int = 255) -> np.ndarray:
    """把 [low, high] 范围的数值线性映射为 0..maxval 的灰度"""
    if not high > low:
        raise ValidationException(f"灰度范围非法: [{low}, {high}]")
    scaled = (np.asarray(values, dtype=float) - low) / (high - low) * maxval
    return np.clip(np.rint(scaled), 0, maxval).astype(np.uint8)


def write_pgm(path: str, image: np.ndarray, maxval: int = 255):
    """写出 P5 格式灰度图（height × width 的 uint8 矩阵）"""
    image = np.asarray(image)
    if image.ndim != 2 or image.dtype != np.uint8:
        raise ValidationException(f"PGM 需要二维 uint8 图像，实际 {image.shape} {image.dtype}")
    height, width = image.shape
    _ensure_parent(path)
    with open(path, "wb") as f:
        f.write(f"P5\n{width} {height}\n{maxval}\n".encode("ascii"))
        f.write(np.ascontiguousarray(image).tobytes())
    logger.debug(f"PGM 已写出: {path} ({width}×{height})")


def read_pgm(path: str) -> np.ndarray:
    """读取 P5 格式灰度图（maxval ≤ 255）"""
    if not os.path.isfile(path):
        raise DataLoadException(f"文件不存在: {path}", status_code=404)
    with open(path, "rb") as f:
        data = f.read()

    tokens = []
    pos = 0
    while len(tokens) < 4:
        # 跳过空白与注释
        while pos < len(data) and data[pos:pos + 1].isspace():
            pos += 1
        if data[pos:pos + 1] == b"#":
            newline = data.find(b"\n", pos)
            if newline < 0:
                raise DataLoadException(f"PGM 头不完整: {path}")
            pos = newline + 1
            continue
        end = pos
        while end < len(data) and not data[end:end + 1].isspace():
            end += 1
        if end == pos:
            raise DataLoadException(f"PGM 头不完整: {path}")
        tokens.append(data[pos:end])
        pos = end
    pos += 1  # 头后的单个空白

    if tokens[0] != b"P5":
        raise DataLoadException(f"不支持的 PGM 类型 {tokens[0]!r}: {path}")
    try:
        width, height, maxval = (int(t) for t in tokens[1:])
    except ValueError as e:
        raise DataLoadException(f"PGM 头包含非数值字段: {path}") from e
    if width < 1 or height < 1 or not 0 < maxval <= 255:
        raise DataLoadException(f"只支持 8 位 PGM，实际 {width}×{height} maxval={maxval}: {path}")
    if len(data) - pos < width * height:
        raise DataLoadException(f"PGM 像素数据被截断: 需要 {width * height} 字节，实际 {len(data) - pos}: {path}")
    pixels = np.frombuffer(data, dtype=np.uint8, count=width * height, offset=pos)
    return pixels.reshape(height, width)
