"""
数据访问层 - Repository 模式
"""
from .artifact_repository import ArtifactRepository

__all__ = [
    'ArtifactRepository',
]
