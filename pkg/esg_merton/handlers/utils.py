# handlers/utils.py
# 通用工具函数和装饰器

import math
from functools import wraps
from typing import Callable, Optional, Tuple

import numpy as np

from ..config_manager import ConfigManager
from ..data import DataManager
from ..errors import DomainError
from ..models import EsgScoreTable, ModelParams, RiskAversionProfile

# 指令常量
CMD_ESTIMATE = "estimate"
CMD_SCORES = "scores"
CMD_ALLOCATE = "allocate"
CMD_TRADEOFF = "tradeoff"
CMD_DOMINANCE = "dominance"
CMD_WEL = "wel"
CMD_SWEEP = "sweep"
CMD_INDIFFERENCE = "indifference"
CMD_VERIFY = "verify"
CMD_REPRODUCE = "reproduce"

ALL_COMMANDS = [
    CMD_ESTIMATE,
    CMD_SCORES,
    CMD_ALLOCATE,
    CMD_TRADEOFF,
    CMD_DOMINANCE,
    CMD_WEL,
    CMD_SWEEP,
    CMD_INDIFFERENCE,
    CMD_VERIFY,
    CMD_REPRODUCE,
]

GRID_TOLERANCE = 1e-9  # 相对步长的端点容差
GRID_DECIMALS = 12


def params_required(func: Callable[..., Tuple[bool, str]]):
    """
    一个装饰器，用于需要市场参数的指令。
    它会按 args.params 读取参数文件或 fixture:<pair> 引用，并将参数对象作为参数注入。
    """
    @wraps(func)
    def wrapper(self, args, *extra, **kwargs):
        reference = getattr(args, "params", None)
        if not reference:
            return False, "缺少 --params 参数（文件路径或 fixture:<pair>）"
        params = load_params(reference, self.config_manager, self.data)
        return func(self, params, args, *extra, **kwargs)

    return wrapper


def load_params(reference: str, config_manager: ConfigManager, data_manager: DataManager) -> ModelParams:
    """读取参数文件或 fixture:<pair> 引用"""
    pair = config_manager.parse_fixture(reference)
    if pair is not None:
        return config_manager.get_pair_params(pair)
    return data_manager.read_params(reference)


def load_scores(reference: Optional[str], config_manager: ConfigManager,
                data_manager: DataManager) -> EsgScoreTable:
    """读取评分文件或 fixture:<pair> 引用"""
    if not reference:
        raise DomainError("缺少 --scores 参数（文件路径或 fixture:<pair>）")
    pair = config_manager.parse_fixture(reference)
    if pair is not None:
        return config_manager.get_pair_scores(pair)
    return data_manager.read_scores(reference)


def parse_grid(text: str) -> np.ndarray:
    """解析 LO:HI:STEP 网格，两端均包含；STEP 可为负数表示降序

    Raises:
        DomainError: 格式错误、STEP 为0或符号与区间方向相反
    """
    parts = str(text).split(":")
    if len(parts) != 3:
        raise DomainError(f"网格格式应为 LO:HI:STEP，当前为 {text!r}")
    try:
        lo, hi, step = (float(p) for p in parts)
    except ValueError as e:
        raise DomainError(f"网格 {text!r} 中含有非数字") from e
    if not all(math.isfinite(v) for v in (lo, hi, step)):
        raise DomainError(f"网格 {text!r} 中含有非有限数值")
    if step == 0:
        raise DomainError("网格步长不能为0")

    span = (hi - lo) / step
    if span < -GRID_TOLERANCE:
        raise DomainError(f"网格步长 {step} 的符号与区间 {lo} -> {hi} 方向相反")
    count = int(math.floor(span + GRID_TOLERANCE)) + 1
    values = lo + step * np.arange(count)
    if abs(values[-1] - hi) <= GRID_TOLERANCE * abs(step):
        values[-1] = hi
    return np.round(values, GRID_DECIMALS)


def parse_float_list(text: str, expected: Optional[int] = None, name: str = "列表") -> Tuple[float, ...]:
    """解析逗号分隔的数值列表"""
    try:
        values = tuple(float(p) for p in str(text).split(",") if p.strip())
    except ValueError as e:
        raise DomainError(f"{name} {text!r} 中含有非数字") from e
    if expected is not None and len(values) != expected:
        raise DomainError(f"{name} 应包含 {expected} 个数，当前为 {len(values)} 个")
    if not values:
        raise DomainError(f"{name} 为空")
    return values


def parse_profile(text: str) -> RiskAversionProfile:
    alpha_m, alpha_g, alpha_b = parse_float_list(text, expected=3, name="--profile")
    return RiskAversionProfile(alpha_m, alpha_g, alpha_b)


def emit(data_manager: DataManager, text: str, out: Optional[str] = None) -> str:
    """有 --out 时写入文件并返回空串，否则返回原文本供 stdout 输出"""
    if out:
        data_manager.write_text(text, out)
        return ""
    return text
