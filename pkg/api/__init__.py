"""API模块

蓝图在 api.routes.init_api_blueprint 中注册；这里不做导入，
以便核心模块可以单独使用 api.exceptions 而不依赖 Flask。
"""
