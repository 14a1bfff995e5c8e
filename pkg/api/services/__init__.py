"""
服务层 - 包含所有业务逻辑
"""
from .config_service import ExperimentConfig, build_config, load_config_file
from .model_service import ModelService
from .imputation_service import ImputationService
from .benchmark_service import BenchmarkService
from .report_service import ReportService, render_table

__all__ = [
    'ExperimentConfig',
    'build_config',
    'load_config_file',
    'ModelService',
    'ImputationService',
    'BenchmarkService',
    'ReportService',
    'render_table',
]
