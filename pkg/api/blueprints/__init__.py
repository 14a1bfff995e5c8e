"""
API 蓝图
"""
from .health import health_bp
from .imputation import imputation_bp

__all__ = ['health_bp', 'imputation_bp']
