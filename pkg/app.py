"""
主应用程序 - FAMI Backend
"""
import logging
from flask import Flask, jsonify
from flask_cors import CORS
from flasgger import Flasgger

from api.exceptions import BaseAPIException
from config import get_config

logger = logging.getLogger(__name__)


def create_app(config_name: str = None, **overrides):
    """
    创建Flask应用

    Args:
        config_name: 配置名称 ('development', 'production', 'testing')
        overrides: 覆盖配置项（如 MODEL_PATH）

    Returns:
        Flask应用实例
    """
    app = Flask(__name__)

    # 加载配置
    config = get_config(config_name)
    app.config.from_object(config)
    app.config.update(overrides)

    # 启用CORS
    CORS(app)

    # 初始化 Swagger/Flasgger
    swagger_config = {
        "headers": [],
        "specs": [
            {
                "endpoint": 'apispec',
                "route": '/apispec.json',
                "rule_filter": lambda rule: True,
                "model_filter": lambda tag: True,
            }
        ],
        "static_url_path": "/flasgger_static",
        "swagger_ui": True,
        "specs_route": "/api/docs"
    }

    Flasgger(app, config=swagger_config)

    logger.info(f"Flask应用初始化: {config_name or 'development'}")

    # 注册API蓝图
    from api.routes import init_api_blueprint
    blueprint = init_api_blueprint()
    app.register_blueprint(blueprint, url_prefix='/api')

    @app.errorhandler(BaseAPIException)
    def handle_api_exception(e: BaseAPIException):
        logger.warning(f"请求失败 ({e.status_code}): {e.message}")
        return jsonify(e.to_dict()), e.status_code

    logger.info("应用初始化完成")

    return app


if __name__ == '__main__':
    config = get_config('development')
    logging.basicConfig(level=config.LOG_LEVEL, format=config.LOG_FORMAT)
    app = create_app('development')
    app.run(host=config.HOST, port=config.PORT, debug=True)
