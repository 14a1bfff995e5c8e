"""
实验参数验证和转换工具
用于把命令行 / 配置文件 / HTTP 请求中的字符串参数转换为有效的实验参数
"""

import logging
from typing import List, Optional, Tuple

from api.exceptions import ValidationException
from models.imputation import METHODS

logger = logging.getLogger(__name__)


class ExperimentParamValidator:
    """实验参数验证器"""

    # 方法别名（用户输入 -> 规范名）
    METHOD_ALIASES = {
        'mean': 'mean',
        'mi': 'mean',
        'mean_imputation': 'mean',
        'fca': 'fca',
        'full': 'fca',
        'sca': 'sca',
        'scaled': 'sca',
        'de': 'de',
        'denoising': 'de',
        'de_star': 'de_star',
        'de*': 'de_star',
        'destar': 'de_star',
        'exact': 'exact',
    }

    # 缺失机制别名
    MASK_KIND_ALIASES = {
        'random': 'random',
        'r': 'random',
        'quarters': 'quarters',
        'quarter': 'quarters',
        'q': 'quarters',
    }

    QUARTERS_MODE_ALIASES = {
        'cycle': 'cycle',
        'uniform': 'uniform',
        'uniform-random': 'uniform',
        'random': 'uniform',
    }

    @staticmethod
    def validate_method(method: Optional[str]) -> str:
        """
        验证并转换单个方法名

        Raises:
            ValidationException: 方法名无法识别
        """
        if not method:
            raise ValidationException("方法名不能为空")
        key = method.lower().strip()
        if key not in ExperimentParamValidator.METHOD_ALIASES:
            raise ValidationException(f"未知填补方法 '{method}'，可选: {', '.join(METHODS)}")
        valid = ExperimentParamValidator.METHOD_ALIASES[key]
        if valid != key:
            logger.debug(f"方法参数转换: {method} -> {valid}")
        return valid

    @staticmethod
    def validate_methods(methods) -> List[str]:
        """
        验证方法列表（逗号分隔字符串或列表，'all' 表示全部）

        返回按报告顺序排列、去重后的方法列表。
        """
        if isinstance(methods, str):
            items = [m for m in methods.split(',') if m.strip()]
        else:
            items = list(methods or [])
        if not items:
            raise ValidationException("方法列表不能为空")
        if any(str(m).strip().lower() == 'all' for m in items):
            return list(METHODS)
        chosen = {ExperimentParamValidator.validate_method(str(m)) for m in items}
        return [m for m in METHODS if m in chosen]

    @staticmethod
    def validate_mask_spec(spec: Optional[str]) -> Tuple[str, dict]:
        """
        解析缺失机制描述

        格式：'random:p'（如 random:0.5）或 'quarters:mode'（mode 为 cycle / uniform）

        Returns:
            (kind, 参数字典)
        """
        if not spec:
            raise ValidationException("缺失机制不能为空")
        kind_part, _, arg = spec.strip().partition(':')
        kind = ExperimentParamValidator.MASK_KIND_ALIASES.get(kind_part.lower().strip())
        if kind is None:
            raise ValidationException(f"未知缺失机制 '{spec}'，格式为 random:p 或 quarters:mode")

        if kind == 'random':
            try:
                p = float(arg) if arg else 0.5
            except ValueError as e:
                raise ValidationException(f"缺失概率不是数值: '{arg}'") from e
            if not 0 <= p <= 1:
                raise ValidationException(f"缺失概率需在 [0, 1] 内，实际为 {p}")
            return kind, {'p': p}

        mode = ExperimentParamValidator.QUARTERS_MODE_ALIASES.get((arg or 'uniform').lower().strip())
        if mode is None:
            raise ValidationException(f"未知 quarters 模式 '{arg}'，可选 cycle / uniform")
        return kind, {'mode': mode}

    @staticmethod
    def validate_fraction(value, name: str, inclusive_high: bool = True) -> float:
        """验证 (0, 1] 或 (0, 1) 内的比例"""
        try:
            fraction = float(value)
        except (TypeError, ValueError) as e:
            raise ValidationException(f"{name} 不是数值: {value!r}") from e
        upper_ok = fraction <= 1 if inclusive_high else fraction < 1
        if not (fraction > 0 and upper_ok):
            raise ValidationException(f"{name} 超出范围: {fraction}")
        return fraction

    @staticmethod
    def validate_seed(value, name: str = "seed") -> int:
        """种子必须是非负整数"""
        try:
            seed = int(value)
        except (TypeError, ValueError) as e:
            raise ValidationException(f"{name} 不是整数: {value!r}") from e
        if seed < 0:
            raise ValidationException(f"{name} 不能为负: {seed}")
        return seed
