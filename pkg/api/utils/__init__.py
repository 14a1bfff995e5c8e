"""API工具模块"""

from .common import (
    get_all_methods,
    tile_panels,
    value_range,
    vector_to_image,
)

__all__ = [
    'get_all_methods',
    'tile_panels',
    'value_range',
    'vector_to_image',
]
