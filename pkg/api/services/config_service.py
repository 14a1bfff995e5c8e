"""
配置服务层 - 实验配置的读取、合并与校验

配置来源按优先级从低到高：config.Config 默认值 → YAML 配置文件 → 命令行参数。
"""
import logging
import os
from dataclasses import dataclass, field, fields, replace
from typing import Any, Dict, List, Optional

import yaml

from api.exceptions import DataLoadException, ValidationException
from config import Config
from data.param_validator import ExperimentParamValidator
from models.imputation import METHODS
from models.masking import MaskGenerator

logger = logging.getLogger(__name__)

SOURCES = ("data", "synthetic")


@dataclass(frozen=True)
class ExperimentConfig:
    """一次实验（拟合 → 掩码 → 填补 → 评分）的全部参数"""

    # 数据来源
    data: Optional[str] = None
    format: str = "csv"
    header: bool = False
    width: Optional[int] = None
    height: Optional[int] = None
    rescale: bool = True
    train_fraction: float = Config.TRAIN_FRACTION

    # 模型
    model: Optional[str] = None
    encoder: Optional[str] = None
    latent_dim: Optional[int] = None
    explained: Optional[float] = None
    fit: bool = False

    # 缺失机制与方法
    mask: str = f"random:{Config.DROP_PROBABILITY}"
    de_star_p: float = Config.DROP_PROBABILITY
    methods: List[str] = field(default_factory=lambda: list(METHODS))

    # 合成数据
    source: str = "data"
    n_test: int = Config.SYNTHETIC_TEST_COUNT
    n_train: int = Config.SYNTHETIC_TRAIN_COUNT
    count: int = Config.SYNTHETIC_TEST_COUNT

    # 四个独立的随机种子
    seed_split: int = Config.SEED_SPLIT
    seed_masks: int = Config.SEED_MASKS
    seed_sampling: int = Config.SEED_SAMPLING
    seed_de: int = Config.SEED_DE

    # 输出
    out: str = Config.OUTPUT_DIR
    images: int = 0
    sweep_step: int = 4

    @property
    def mask_kind(self) -> str:
        return ExperimentParamValidator.validate_mask_spec(self.mask)[0]

    @property
    def image_shape(self):
        if self.width and self.height:
            return int(self.width), int(self.height)
        return None

    @property
    def model_path(self) -> str:
        return self.model or os.path.join(self.out, "model.npz")

    def mask_generator(self, width: Optional[int] = None, height: Optional[int] = None) -> MaskGenerator:
        """根据 mask 描述构造测试用的缺失模式生成器"""
        kind, params = ExperimentParamValidator.validate_mask_spec(self.mask)
        if kind == "random":
            return MaskGenerator.random(params["p"], seed=self.seed_masks)
        width = width or self.width
        height = height or self.height
        if not (width and height):
            raise ValidationException("quarters 缺失机制需要 --width 和 --height")
        return MaskGenerator.quarters(width, height, params["mode"], seed=self.seed_masks)

    def de_star_generator(self) -> MaskGenerator:
        """DE* 的训练缺失机制：随机缺失"""
        return MaskGenerator.random(self.de_star_p, seed=self.seed_de)


def _normalize_key(key: str) -> str:
    return key.strip().replace('-', '_')


def load_config_file(path: str) -> Dict[str, Any]:
    """读取 YAML 配置文件"""
    if not os.path.isfile(path):
        raise DataLoadException(f"配置文件不存在: {path}", status_code=404)
    try:
        with open(path, "r", encoding="utf-8") as f:
            raw = yaml.safe_load(f) or {}
    except yaml.YAMLError as e:
        raise ValidationException(f"配置文件解析失败: {path} ({e})") from e
    if not isinstance(raw, dict):
        raise ValidationException(f"配置文件顶层必须是映射: {path}")
    logger.info(f"读取配置文件: {path}")
    return {_normalize_key(k): v for k, v in raw.items()}


def build_config(file_values: Optional[Dict[str, Any]] = None,
                 overrides: Optional[Dict[str, Any]] = None) -> ExperimentConfig:
    """
    合并配置文件与命令行参数，并校验

    Args:
        file_values: 配置文件内容
        overrides: 命令行参数（值为 None 的项不覆盖）

    Returns:
        ExperimentConfig
    """
    known = {f.name for f in fields(ExperimentConfig)}
    merged: Dict[str, Any] = {}
    for source in (file_values or {}, overrides or {}):
        for key, value in source.items():
            key = _normalize_key(key)
            if key not in known:
                raise ValidationException(f"未知配置项: {key}")
            if value is not None:
                merged[key] = value

    if "methods" in merged:
        merged["methods"] = ExperimentParamValidator.validate_methods(merged["methods"])
    config = ExperimentConfig(**merged)
    return validate_config(config)


def validate_config(config: ExperimentConfig) -> ExperimentConfig:
    """校验配置的不变量"""
    v = ExperimentParamValidator
    if not config.methods:
        raise ValidationException("方法列表不能为空")
    v.validate_mask_spec(config.mask)
    v.validate_fraction(config.train_fraction, "train_fraction", inclusive_high=False)
    if not 0 <= float(config.de_star_p) <= 1:
        raise ValidationException(f"de_star_p 需在 [0, 1] 内，实际为 {config.de_star_p}")
    if config.explained is not None:
        v.validate_fraction(config.explained, "explained")
    if config.latent_dim is not None and int(config.latent_dim) < 1:
        raise ValidationException(f"latent_dim 至少为 1，实际为 {config.latent_dim}")
    if config.source not in SOURCES:
        raise ValidationException(f"source 需为 {SOURCES}，实际为 {config.source}")
    for name in ("seed_split", "seed_masks", "seed_sampling", "seed_de"):
        v.validate_seed(getattr(config, name), name)
    for name in ("n_test", "n_train", "count", "images"):
        if int(getattr(config, name)) < 0:
            raise ValidationException(f"{name} 不能为负")
    if int(config.sweep_step) < 1:
        raise ValidationException("sweep_step 至少为 1")
    if bool(config.width) != bool(config.height):
        raise ValidationException("width 与 height 需同时给出")
    return replace(config, methods=v.validate_methods(config.methods))
