"""
配置文件 - 管理环境变量和实验默认参数
"""
import os
from dotenv import load_dotenv

load_dotenv()


class Config:
    """基础配置"""
    # Flask配置
    DEBUG = False
    TESTING = False
    JSON_SORT_KEYS = False
    JSONIFY_PRETTYPRINT_REGULAR = True

    # 日志配置
    LOG_LEVEL = os.getenv("FAMI_LOG_LEVEL", "INFO")
    LOG_FORMAT = '%(asctime)s - %(name)s - %(levelname)s - %(message)s'

    # 服务配置
    HOST = os.getenv("FAMI_HOST", "0.0.0.0")
    PORT = int(os.getenv("FAMI_PORT", 5000))
    MODEL_PATH = os.getenv("FAMI_MODEL_PATH", "output/model.npz")
    ENCODER_PATH = os.getenv("FAMI_ENCODER_PATH", "")

    # 输出配置
    OUTPUT_DIR = os.getenv("FAMI_OUTPUT_DIR", "output")

    # 数据配置（Frey 人脸：20×28 灰度帧）
    FREY_DATA_PATH = os.getenv("FAMI_FREY_DATA", "")
    IMAGE_WIDTH = 20
    IMAGE_HEIGHT = 28
    TRAIN_FRACTION = 0.8
    RESCALE_LOW = -1.0
    RESCALE_HIGH = 1.0

    # 模型配置
    EXPLAINED_FRACTION = 0.90

    # 缺失机制配置
    DROP_PROBABILITY = 0.5
    QUARTERS_MODE = "uniform"  # 'cycle' 或 'uniform'

    # 去噪编码器配置
    DE_RIDGE_FACTOR = 1e-8

    # 数值配置
    SYMMETRY_TOLERANCE = 1e-12

    # 合成数据实验（模型匹配数据）
    SYNTHETIC_TEST_COUNT = 400
    SYNTHETIC_TRAIN_COUNT = 1600

    # 随机种子：每个实验因素一个独立种子
    SEED_SPLIT = int(os.getenv("FAMI_SEED_SPLIT", 0))
    SEED_MASKS = int(os.getenv("FAMI_SEED_MASKS", 0))
    SEED_SAMPLING = int(os.getenv("FAMI_SEED_SAMPLING", 0))
    SEED_DE = int(os.getenv("FAMI_SEED_DE", 0))

    # 图像导出
    PGM_MAXVAL = 255


class DevelopmentConfig(Config):
    """开发环境配置"""
    DEBUG = True


class ProductionConfig(Config):
    """生产环境配置"""
    DEBUG = False
    TESTING = False


class TestingConfig(Config):
    """测试环境配置"""
    TESTING = True
    LOG_LEVEL = "WARNING"


# 获取配置
def get_config(env=None):
    """根据环境变量返回对应配置"""
    if env is None:
        env = os.getenv("FAMI_ENV", "development")

    config_map = {
        "development": DevelopmentConfig,
        "production": ProductionConfig,
        "testing": TestingConfig,
    }

    return config_map.get(env, DevelopmentConfig)
