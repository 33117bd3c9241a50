# errors.py

from typing import Optional

__all__ = [
    "EsgMertonError",
    "DomainError",
    "DataParseError",
    "RatingParseError",
    "InsufficientDataError",
]


class EsgMertonError(Exception):
    """本包所有业务异常的基类"""


class DomainError(EsgMertonError, ValueError):
    """数值前置条件不满足（波动率非正、相关系数越界、风险厌恶参数非法等）"""


class DataParseError(EsgMertonError, ValueError):
    """价格、利率或参数文件中的某一行无法解析"""

    def __init__(self, message: str, row: Optional[int] = None):
        self.row = row
        self.detail = message
        if row is not None:
            message = f"第 {row} 行: {message}"
        super().__init__(message)


class RatingParseError(DataParseError):
    """评级文件中出现未知的字母等级"""


class InsufficientDataError(EsgMertonError, ValueError):
    """对齐后的样本数量不足以估计参数"""

    def __init__(self, available: int, required: int):
        self.available = available
        self.required = required
        super().__init__(f"对齐后仅有 {available} 个观测，至少需要 {required} 个")
