"""数据模块"""
from .dataset import Dataset, RescaleParams, load_matrix, rescale_to_unit_interval, split
from .param_validator import ExperimentParamValidator

__all__ = [
    "Dataset",
    "RescaleParams",
    "load_matrix",
    "rescale_to_unit_interval",
    "split",
    "ExperimentParamValidator",
]
