"""
命令行入口 - 拟合、采样、基准实验、单样本填补、报告渲染与 HTTP 服务

示例:
  python cli.py fit --data frey.csv --width 20 --height 28 --explained 0.9 --out output
  python cli.py benchmark --config experiments/frey.yaml --mask quarters:uniform --images 4
  python cli.py benchmark --source synthetic --mask random:0.5 --methods all
  python cli.py report --input output/report.csv
"""
import argparse
import json
import logging
import sys
from dataclasses import fields
from typing import Any, Dict, List, Optional

import numpy as np

from api.exceptions import BaseAPIException, ValidationException
from api.repositories import ArtifactRepository
from api.services import (
    BenchmarkService,
    ExperimentConfig,
    ImputationService,
    ModelService,
    ReportService,
    build_config,
    load_config_file,
)
from config import Config

logger = logging.getLogger("fami.cli")

CONFIG_FIELDS = {f.name for f in fields(ExperimentConfig)}


def _add_data_args(parser: argparse.ArgumentParser):
    group = parser.add_argument_group("数据")
    group.add_argument("--data", help="数据文件路径")
    group.add_argument("--format", choices=["csv", "raw-u8", "mat"], help="数据格式 (默认 csv)")
    group.add_argument("--header", action="store_true", default=None, help="CSV 第一行为表头")
    group.add_argument("--width", type=int, help="图像宽度")
    group.add_argument("--height", type=int, help="图像高度")
    group.add_argument("--no-rescale", dest="rescale", action="store_false", default=None,
                       help="不把数据缩放到 [-1, 1]")
    group.add_argument("--train-fraction", type=float, help="训练集比例 (默认 0.8)")


def _add_model_args(parser: argparse.ArgumentParser):
    group = parser.add_argument_group("模型")
    group.add_argument("--model", help="模型文件 (默认 OUT/model.npz)")
    latent = group.add_mutually_exclusive_group()
    latent.add_argument("--latent-dim", type=int, help="隐变量维数 K")
    latent.add_argument("--explained", type=float, help="按解释方差比例选择 K (默认 0.90)")


def _add_seed_args(parser: argparse.ArgumentParser):
    group = parser.add_argument_group("随机种子")
    for name in ("split", "masks", "sampling", "de"):
        group.add_argument(f"--seed-{name}", type=int, help=f"{name} 随机种子")


def _add_common_args(parser: argparse.ArgumentParser):
    parser.add_argument("--config", help="YAML 配置文件，命令行参数优先")
    parser.add_argument("--out", help="输出目录")
    parser.add_argument("--log-level", default=Config.LOG_LEVEL, help="日志级别")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fami",
        description="因子分析模型的缺失数据推断与填补基准",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog=__doc__,
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("fit", help="在训练集上拟合 PPCA 模型")
    _add_common_args(p)
    _add_data_args(p)
    _add_model_args(p)
    _add_seed_args(p)

    p = sub.add_parser("sample", help="从模型采样")
    _add_common_args(p)
    _add_model_args(p)
    _add_seed_args(p)
    p.add_argument("--count", type=int, help="采样行数")
    p.add_argument("--output", help="输出 CSV (默认 OUT/samples.csv)")

    p = sub.add_parser("benchmark", help="运行填补基准实验")
    _add_common_args(p)
    _add_data_args(p)
    _add_model_args(p)
    _add_seed_args(p)
    p.add_argument("--fit", action="store_true", default=None, help="先拟合模型")
    p.add_argument("--source", choices=["data", "synthetic"], help="评分数据来源")
    p.add_argument("--n-test", type=int, help="合成测试样本数 (默认 400)")
    p.add_argument("--n-train", type=int, help="合成编码器训练样本数 (默认 1600)")
    p.add_argument("--mask", help="缺失机制: random:p 或 quarters:cycle|uniform")
    p.add_argument("--de-star-p", type=float, help="DE* 训练用的随机缺失概率")
    p.add_argument("--methods", help="逗号分隔的方法列表或 all")
    p.add_argument("--images", type=int, help="导出前 N 个测试样本的图像")
    p.add_argument("--sweep-step", type=int, help="逐行扫描的步长")

    p = sub.add_parser("impute", help="填补单个样本")
    _add_common_args(p)
    _add_data_args(p)
    _add_model_args(p)
    _add_seed_args(p)
    p.add_argument("--encoder", help="去噪编码器文件 (de / de_star 方法使用)")
    p.add_argument("--row", type=int, default=0, help="数据文件中的行号")
    p.add_argument("--observed", help="观测位串 (1=观测, 0=缺失)；省略时按 --mask 生成")
    p.add_argument("--mask", help="缺失机制: random:p 或 quarters:cycle|uniform")
    p.add_argument("--method", default="exact", help="填补方法")
    p.add_argument("--output", help="输出 CSV (默认 OUT/imputed.csv)")

    p = sub.add_parser("report", help="把报告 CSV 渲染为表格")
    _add_common_args(p)
    p.add_argument("--input", help="报告 CSV (默认 OUT/report.csv)")

    p = sub.add_parser("serve", help="启动 HTTP 服务")
    _add_common_args(p)
    _add_model_args(p)
    p.add_argument("--encoder", help="去噪编码器文件")
    p.add_argument("--host", default=Config.HOST)
    p.add_argument("--port", type=int, default=Config.PORT)
    return parser


def config_from_args(args: argparse.Namespace) -> ExperimentConfig:
    """配置文件与命令行参数合并为 ExperimentConfig"""
    file_values = load_config_file(args.config) if args.config else {}
    overrides: Dict[str, Any] = {
        key: value for key, value in vars(args).items() if key in CONFIG_FIELDS
    }
    return build_config(file_values, overrides)


# ==================== 子命令 ====================

def cmd_fit(config: ExperimentConfig, args) -> int:
    result = ModelService(ArtifactRepository(config.out)).fit(config)
    diagnostics = result["diagnostics"]
    print(f"K={result['model'].K}")
    print(f"explained_fraction={diagnostics.explained_fraction:.6f}")
    print(f"sigma2={diagnostics.sigma2:.6g}")
    print(f"model={result['path']}")
    return 0


def cmd_sample(config: ExperimentConfig, args) -> int:
    service = ModelService(ArtifactRepository(config.out))
    path = args.output or service.repository.path("samples.csv")
    values = service.sample(config, out_path=path)
    print(f"samples={path} ({values.shape[0]} 行)")
    return 0


def cmd_benchmark(config: ExperimentConfig, args) -> int:
    result = BenchmarkService(ArtifactRepository(config.out)).run(config)
    print(f"report={result['report_path']}")
    for path in result["images"]:
        print(f"image={path}")
    return 0


def cmd_impute(config: ExperimentConfig, args) -> int:
    repository = ArtifactRepository(config.out)
    service = ImputationService(config.model_path, config.encoder, repository)
    if not config.data:
        raise ValidationException("impute 需要 --data 指定输入文件")
    _, _, rescale, _ = repository.load_model(config.model_path)
    dataset = repository.load_dataset(config.data, config.format, config.width, config.height, config.header)
    if not 0 <= args.row < dataset.N:
        raise ValidationException(f"行号越界: {args.row}，数据共 {dataset.N} 行")
    x = dataset.values[args.row]
    if config.rescale and rescale is not None:
        x = rescale.apply(x)

    if args.observed:
        observed = args.observed
    else:
        generator = config.mask_generator(*(dataset.image_shape or (None, None)))
        observed = generator.mask_for(args.row, dataset.D).observed.astype(int).tolist()

    result = service.impute(x, observed, args.method)
    completed = result["completed"]
    if config.rescale and rescale is not None:
        completed = rescale.invert(completed)
    path = args.output or repository.path("imputed.csv")
    repository.save_matrix(path, np.asarray([completed]))
    print(json.dumps({
        "method": result["method"],
        "n_missing": result["n_missing"],
        "output": path,
    }, ensure_ascii=False))
    return 0


def cmd_report(config: ExperimentConfig, args) -> int:
    repository = ArtifactRepository(config.out)
    print(ReportService(repository).render(args.input or repository.path("report.csv")))
    return 0


def cmd_serve(config: ExperimentConfig, args) -> int:
    from app import create_app

    app = create_app(
        None,
        MODEL_PATH=config.model_path,
        ENCODER_PATH=getattr(args, "encoder", None) or Config.ENCODER_PATH,
    )
    app.run(host=args.host, port=args.port)
    return 0


COMMANDS = {
    "fit": cmd_fit,
    "sample": cmd_sample,
    "benchmark": cmd_benchmark,
    "impute": cmd_impute,
    "report": cmd_report,
    "serve": cmd_serve,
}


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=args.log_level.upper(), format=Config.LOG_FORMAT)
    try:
        config = config_from_args(args)
        return COMMANDS[args.command](config, args)
    except BaseAPIException as e:
        logger.error(f"{type(e).__name__}: {e.message}")
        return e.exit_code


if __name__ == "__main__":
    sys.exit(main())
