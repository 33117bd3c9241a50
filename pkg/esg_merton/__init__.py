# esg_merton - 单因子ESG市场模型下的多元CRRA组合工具

from .config_manager import ConfigManager
from .errors import DataParseError, DomainError, EsgMertonError, InsufficientDataError, RatingParseError
from .models import EsgScoreTable, ModelParams, RiskAversionProfile

__all__ = [
    "ConfigManager",
    "EsgMertonError",
    "DomainError",
    "DataParseError",
    "RatingParseError",
    "InsufficientDataError",
    "ModelParams",
    "RiskAversionProfile",
    "EsgScoreTable",
]
