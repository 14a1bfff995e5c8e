"""
基准实验服务层 - 生成缺失模式、训练去噪编码器、运行全部填补方法并评分

两种数据来源：
- data：真实数据，按 train / test 两个划分分别评分，编码器只在训练集上训练
- synthetic：从模型采样（模型由数据拟合、从文件读取或随机构造），
  前 n_test 行作为测试集，其余 n_train 行用于训练编码器
"""
import logging
import os
from typing import Any, Dict, List, Optional, Tuple

import numpy as np

from api.exceptions import ValidationException
from api.repositories import ArtifactRepository
from api.services.config_service import ExperimentConfig
from api.services.model_service import ModelService
from api.utils.common import tile_panels, value_range, vector_to_image
from config import Config
from data.dataset import SPLIT_TEST, SPLIT_TRAIN
from data.formats import to_gray
from models.factor_model import FactorModel, sample
from models.imputation import (
    ImputationReport,
    ImputationResult,
    impute,
    impute_all,
    score,
)
from models.inference import DenoisingEncoder, Mask, train_denoising_encoder
from models.masking import MaskGenerator, row_reveal_masks

logger = logging.getLogger(__name__)

# 每个划分使用独立的缺失模式子流
SPLIT_STREAM_INDEX = {SPLIT_TRAIN: 0, SPLIT_TEST: 1}

# 图像条带中的方法顺序
STRIP_METHODS = ("mean", "fca", "sca", "de", "exact", "de_star")


class BenchmarkService:
    """基准实验服务"""

    def __init__(self, repository: Optional[ArtifactRepository] = None):
        self.repository = repository or ArtifactRepository()
        self.model_service = ModelService(self.repository)

    # ==================== 数据与模型 ====================

    def _prepare_data(self, config: ExperimentConfig) -> Dict[str, Any]:
        """
        准备模型、评分数据与编码器训练数据

        Returns:
            model, splits (划分名 → 数据), de_train, image_shape, gray_range
        """
        rescale = None
        image_shape = config.image_shape
        dataset = None

        if config.data:
            dataset, rescale = self.model_service.load_dataset(config)
            image_shape = dataset.image_shape or image_shape
            if config.fit or not os.path.isfile(config.model_path):
                model = self.model_service.fit(config, dataset, rescale)["model"]
            else:
                model, _, _, stored_shape = self.model_service.load(config)
                image_shape = image_shape or stored_shape
        elif config.source == "synthetic" and (config.model or os.path.isfile(config.model_path)):
            model, _, rescale, stored_shape = self.model_service.load(config)
            image_shape = image_shape or stored_shape
        elif config.source == "synthetic":
            model = self.model_service.random_model(config)
            image_shape = image_shape or (config.width or Config.IMAGE_WIDTH,
                                          config.height or Config.IMAGE_HEIGHT)
        else:
            raise ValidationException("source=data 需要 --data 指定数据文件")

        if dataset is not None and dataset.D != model.D:
            raise ValidationException(f"数据维数 D={dataset.D} 与模型维数 D={model.D} 不符")

        if config.source == "synthetic":
            n_test, n_train = int(config.n_test), int(config.n_train)
            values = sample(model, n_test + n_train, seed=config.seed_sampling)
            splits = {SPLIT_TEST: values[:n_test]}
            de_train = values[n_test:]
            logger.info(f"模型匹配数据: 测试 {n_test} 行, 编码器训练 {n_train} 行")
        else:
            splits = {SPLIT_TRAIN: dataset.train, SPLIT_TEST: dataset.test}
            de_train = dataset.train

        gray_range = (rescale.low, rescale.high) if rescale is not None else None
        return {
            "model": model,
            "splits": splits,
            "de_train": de_train,
            "image_shape": image_shape,
            "gray_range": gray_range,
        }

    # ==================== 去噪编码器 ====================

    def _train_encoders(self, config: ExperimentConfig, model: FactorModel, de_train: np.ndarray,
                        generator: MaskGenerator) -> Dict[str, DenoisingEncoder]:
        """
        训练 de（与测试缺失机制一致）与 de_star（随机缺失训练）

        测试机制本身是随机缺失时，de_star 直接复用 de 的编码器。
        """
        encoders: Dict[str, DenoisingEncoder] = {}
        wanted = [m for m in ("de", "de_star") if m in config.methods]
        if not wanted:
            return encoders

        if "de" in wanted or generator.kind == "random":
            encoders["de"] = train_denoising_encoder(
                model, de_train, generator, seed=config.seed_de, ridge_factor=Config.DE_RIDGE_FACTOR,
            )
            self.repository.save_encoder(self.repository.path("encoder_de.npz"), encoders["de"])
        if "de_star" in wanted:
            if generator.kind == "random":
                encoders["de_star"] = encoders["de"]
            else:
                encoders["de_star"] = train_denoising_encoder(
                    model, de_train, config.de_star_generator(), seed=config.seed_de,
                    ridge_factor=Config.DE_RIDGE_FACTOR,
                )
            self.repository.save_encoder(self.repository.path("encoder_de_star.npz"), encoders["de_star"])
        return encoders

    # ==================== 主流程 ====================

    def run(self, config: ExperimentConfig) -> Dict[str, Any]:
        """
        运行一次完整的基准实验

        Returns:
            reports（ImputationReport 列表）、report_path 与写出的图像路径
        """
        prepared = self._prepare_data(config)
        model = prepared["model"]
        image_shape = prepared["image_shape"]
        width, height = image_shape if image_shape else (None, None)
        generator = config.mask_generator(width, height)
        encoders = self._train_encoders(config, model, prepared["de_train"], generator)

        logger.info(
            f"开始基准实验: D={model.D}, K={model.K}, 缺失机制={config.mask}, "
            f"方法={','.join(config.methods)}"
        )
        reports: List[ImputationReport] = []
        test_results: Dict[str, List[ImputationResult]] = {}
        test_masks: List[Mask] = []
        for split_name, values in prepared["splits"].items():
            observed = generator.generate(values.shape[0], model.D, index=SPLIT_STREAM_INDEX[split_name])
            masks = [Mask(row) for row in observed]
            self.repository.save_masks(self.repository.path(f"masks_{split_name}.csv"), masks)
            for method in config.methods:
                results = impute_all(method, model, encoders.get(method), values, observed)
                report = score(values, results, masks, method=method,
                               mask_kind=generator.label, split=split_name)
                reports.append(report)
                logger.info(
                    f"  {split_name:5s} {method:8s} "
                    f"误差={report.mean_error:.6g} ± {report.std_error:.3g} (N={report.n_examples})"
                )
                if split_name == SPLIT_TEST:
                    test_results[method] = results
            if split_name == SPLIT_TEST:
                test_masks = masks

        report_path = self.repository.path("report.csv")
        self.repository.save_report(report_path, reports)

        images: List[str] = []
        if config.images > 0:
            if image_shape is None:
                logger.warning("没有图像尺寸，跳过图像导出")
            else:
                test_values = prepared["splits"][SPLIT_TEST]
                low, high = prepared["gray_range"] or (None, None)
                gray_range = value_range(test_values, low=low, high=high)
                images += self.write_strips(test_values, test_masks, test_results, image_shape,
                                            gray_range, int(config.images))
                if len(test_values):
                    images.append(self.write_sweep(model, test_values[0], image_shape,
                                                   gray_range, int(config.sweep_step)))

        logger.info(f"✓ 基准实验完成: {len(reports)} 行报告, {len(images)} 张图像")
        return {"reports": reports, "report_path": report_path, "images": images}

    # ==================== 图像导出 ====================

    def write_strips(self, truth: np.ndarray, masks: List[Mask], results: Dict[str, List[ImputationResult]],
                     image_shape: Tuple[int, int], gray_range: Tuple[float, float], count: int) -> List[str]:
        """
        每个测试样本一张条带图

        第一行：缺失区域涂黑的输入、原图、各方法的填补结果；
        第二行：观测模式、空白、各方法的平方误差图（统一灰度范围）。
        """
        width, height = image_shape
        low, high = gray_range
        methods = [m for m in STRIP_METHODS if m in results]
        paths = []
        for i in range(min(count, truth.shape[0])):
            mask = masks[i]
            original = to_gray(truth[i], low, high)
            blanked = np.where(mask.observed, original, 0).astype(np.uint8)
            top = [vector_to_image(blanked, width, height), vector_to_image(original, width, height)]
            errors = {m: (truth[i] - results[m][i].completed) ** 2 for m in methods}
            error_high = max([float(e.max()) for e in errors.values()] + [0.0]) or 1.0
            bottom = [
                vector_to_image(np.where(mask.observed, 255, 0).astype(np.uint8), width, height),
                np.zeros((height, width), dtype=np.uint8),
            ]
            for m in methods:
                top.append(vector_to_image(to_gray(results[m][i].completed, low, high), width, height))
                bottom.append(vector_to_image(to_gray(errors[m], 0.0, error_high), width, height))

            path = self.repository.path("images", f"strip_{i:03d}.pgm")
            self.repository.save_image(path, tile_panels([top, bottom]))
            paths.append(path)
        logger.info(f"✓ 条带图已写出: {len(paths)} 张 (方法: {','.join(methods)})")
        return paths

    def write_sweep(self, model: FactorModel, x: np.ndarray, image_shape: Tuple[int, int],
                    gray_range: Tuple[float, float], step: int = 4) -> str:
        """
        逐行揭示的不确定性扫描（精确推断）

        第一行为各步的填补均值，第二行为预测标准差（全图统一范围）。
        """
        width, height = image_shape
        low, high = gray_range
        masks = list(row_reveal_masks(width, height))
        chosen = masks[::step]
        if chosen[-1] is not masks[-1]:
            chosen.append(masks[-1])

        completed, stds = [], []
        for mask in chosen:
            result = impute("exact", model, None, np.where(mask.observed, x, 0.0), mask)
            completed.append(result.completed)
            stds.append(result.predictive_std)
        std_high = max(float(np.max(s)) for s in stds) or 1.0

        top = [vector_to_image(to_gray(c, low, high), width, height) for c in completed]
        bottom = [vector_to_image(to_gray(s, 0.0, std_high), width, height) for s in stds]
        path = self.repository.path("images", "sweep.pgm")
        self.repository.save_image(path, tile_panels([top, bottom]))
        logger.info(f"✓ 不确定性扫描已写出: {path} ({len(chosen)} 步)")
        return path
