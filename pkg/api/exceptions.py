"""
异常定义 - 统一的异常处理

每个异常同时携带 HTTP 状态码（供 Flask 接口使用）和进程退出码（供命令行使用），
不同错误类别的退出码互不相同。
"""


class BaseAPIException(Exception):
    """基础异常"""

    exit_code = 1

    def __init__(self, message: str, status_code: int = 500):
        """
        初始化异常

        Args:
            message: 异常消息
            status_code: HTTP 状态码
        """
        self.message = message
        self.status_code = status_code
        super().__init__(self.message)

    def to_dict(self):
        """转换为字典"""
        return {
            "status": "error",
            "error": type(self).__name__,
            "message": self.message
        }


class ValidationException(BaseAPIException):
    """参数验证异常（参数非法、配置错误、用法错误）"""

    exit_code = 2

    def __init__(self, message: str = "参数验证失败"):
        super().__init__(message, status_code=400)


class DimensionMismatchException(BaseAPIException):
    """维度不匹配异常"""

    exit_code = 3

    def __init__(self, message: str = "维度不匹配"):
        super().__init__(message, status_code=400)


class NonFiniteInputException(BaseAPIException):
    """输入中含有 NaN 或 inf"""

    exit_code = 4

    def __init__(self, message: str = "输入包含非有限值"):
        super().__init__(message, status_code=400)


class DegenerateDataException(BaseAPIException):
    """数据退化异常（常数数据、谱不足、没有缺失样本等）"""

    exit_code = 5

    def __init__(self, message: str = "数据退化"):
        super().__init__(message, status_code=422)


class DataLoadException(BaseAPIException):
    """数据读取异常"""

    exit_code = 6

    def __init__(self, message: str = "数据读取失败", status_code: int = 400):
        super().__init__(message, status_code=status_code)


class ModelFormatException(BaseAPIException):
    """模型文件格式异常（魔数或版本不符）"""

    exit_code = 7

    def __init__(self, message: str = "模型文件格式错误"):
        super().__init__(message, status_code=400)


class NumericalException(BaseAPIException):
    """数值计算异常（分解失败等）"""

    exit_code = 8

    def __init__(self, message: str = "数值计算失败"):
        super().__init__(message, status_code=500)
