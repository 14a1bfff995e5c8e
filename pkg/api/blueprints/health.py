"""
健康检查端点
"""
import logging
from flask import Blueprint, jsonify

from api.utils import get_all_methods

logger = logging.getLogger(__name__)

health_bp = Blueprint('health', __name__)

VERSION = "1.0.0"


@health_bp.route('/health', methods=['GET'])
def health():
    """
    健康检查端点
    ---
    tags:
      - Health
    responses:
      200:
        description: 服务正常运行
        schema:
          properties:
            status:
              type: string
              example: "ok"
            version:
              type: string
              example: "1.0.0"
            methods:
              type: array
              description: 可用的填补方法
    """
    return jsonify({
        "status": "ok",
        "version": VERSION,
        "message": "FAMI Backend is running",
        "methods": get_all_methods(),
    }), 200
