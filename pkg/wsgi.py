"""
WSGI 应用程序入口 - 用于生产部署（Gunicorn/uWSGI）
"""
import logging
import os
from app import create_app
from config import get_config

# 根据环境变量选择配置
env = os.getenv('FAMI_ENV', 'production')
logging.basicConfig(level=get_config(env).LOG_LEVEL, format=get_config(env).LOG_FORMAT)
app = create_app(env)

if __name__ == "__main__":
    app.run()
