# models_extended.py - 结果与报告模型

from dataclasses import dataclass, field, asdict
from enum import Enum
from typing import Dict, Optional, Tuple
import math

import numpy as np
import pandas as pd

from .models import ModelParams, SyntheticCoefficients

__all__ = [
    "Strategy",
    "AllocationResult",
    "ValueCoefficients",
    "DominanceResult",
    "TradeoffPoint",
    "WelReport",
    "RiskAversionReport",
    "IndifferenceCurve",
    "McEstimate",
    "VerificationReport",
    "GridSearchResult",
    "PricePanel",
    "EstimatedParams",
]


class Strategy(str, Enum):
    """次优策略类型"""
    MERTON = "merton"        # 统一风险厌恶的 Merton 权重
    NO_GREEN = "no-green"    # 不投资绿色股票
    CUSTOM = "custom"        # 任意常数权重

    @classmethod
    def get_name(cls, strategy: "Strategy") -> str:
        """获取策略名称"""
        names = {
            cls.MERTON: "Merton策略",
            cls.NO_GREEN: "不投资绿色股票",
            cls.CUSTOM: "自定义常数权重",
        }
        return names.get(strategy, "未知策略")


@dataclass(frozen=True)
class AllocationResult:
    """指数、绿色股票、棕色股票的财富占比"""

    pi1: float
    pi2: float
    pi3: float
    beta_p: float  # 组合市场暴露 pi1 + beta2*pi2 + beta3*pi3

    @property
    def pi_cash(self) -> float:
        return 1.0 - self.pi1 - self.pi2 - self.pi3

    @property
    def weights(self) -> Tuple[float, float, float]:
        return (self.pi1, self.pi2, self.pi3)

    def recompute_beta(self, synthetics: SyntheticCoefficients) -> float:
        return self.pi1 + synthetics.beta2 * self.pi2 + synthetics.beta3 * self.pi3

    def to_dict(self) -> Dict[str, float]:
        return {
            "pi1": self.pi1,
            "pi2": self.pi2,
            "pi3": self.pi3,
            "piCash": self.pi_cash,
            "betaP": self.beta_p,
        }


@dataclass(frozen=True)
class ValueCoefficients:
    """值函数指数增长系数 b 与 Merton 基准系数 b_M"""

    b: float
    b_m: float
    a: Optional[float] = None  # Merton 效用的初始对齐缩放常数
    c: Optional[float] = None  # W0 / (Xm0 * Xg0 * Xb0)


@dataclass(frozen=True)
class DominanceResult:
    """绿色权重是否超过棕色权重的判定"""

    m: float
    pi2_greater_than_pi3: bool
    alpha_b_threshold: Optional[float] = None  # m > 1 时要求 alpha_b < 1 - m
    alpha_g_threshold: Optional[float] = None  # m > 1 时要求 alpha_g > 1 - 1/m + alpha_b/m

    def to_dict(self) -> Dict[str, object]:
        return {
            "m": self.m,
            "pi2GreaterThanPi3": self.pi2_greater_than_pi3,
            "alphaBThreshold": self.alpha_b_threshold,
            "alphaGThreshold": self.alpha_g_threshold,
        }


@dataclass(frozen=True)
class TradeoffPoint:
    """绿-棕风险厌恶权衡曲线上的一点"""

    alpha_b: float
    alpha_g: Optional[float]
    allocation: Optional[AllocationResult]
    b: Optional[float]
    solved: bool = True
    reason: str = ""


@dataclass(frozen=True)
class WelReport:
    """绿色指数财富等价损失（GWEL）"""

    b_star: float  # 次优常数策略的值函数系数
    b_opt: float  # 最优值函数系数 b
    q: float  # GWEL 比例
    log_retention: float  # log(1 - q) = (b_star - b_opt) * T / alpha_g
    strategy: Strategy = Strategy.CUSTOM
    horizon: float = 0.0

    def to_dict(self) -> Dict[str, object]:
        return {
            "bStar": self.b_star,
            "bOpt": self.b_opt,
            "q": self.q,
            "logRetention": self.log_retention,
            "strategy": self.strategy.value,
            "T": self.horizon,
        }


@dataclass(frozen=True)
class RiskAversionReport:
    """多元风险厌恶诊断结果"""

    monotonic: bool
    km: bool
    fr: bool
    s: bool
    rra: Tuple[float, float, float]
    ara: Tuple[float, float, float]
    point: Tuple[float, float, float]
    km_conditions: Dict[str, bool] = field(default_factory=dict)

    def to_dict(self) -> Dict[str, object]:
        return asdict(self)


@dataclass(frozen=True)
class IndifferenceCurve:
    """固定效用水平与 X_m 下的 X_g-X_b 无差异曲线 xg^p1 * xb^p2 = C"""

    p1: float
    p2: float
    constant: float
    xm: float
    utility_level: float
    kappa: Optional[float] = None

    def xb_for(self, xg):
        """给定 X_g 求曲线上的 X_b"""
        xg = np.asarray(xg, dtype=float)
        return (self.constant / xg ** self.p1) ** (1.0 / self.p2)

    def slope_at(self, xg: float) -> float:
        """曲线在 xg 处的斜率 dxb/dxg"""
        xb = float(self.xb_for(xg))
        return -(self.p1 / self.p2) * xb / xg


@dataclass(frozen=True)
class McEstimate:
    """期望效用的蒙特卡洛估计"""

    estimate: float
    standard_error: float
    log_abs_estimate: float  # log|E[u]|，避免极端 alpha 下溢出
    relative_error: float  # standard_error / |estimate|，按对数空间计算
    n_paths: int
    sign: float = -1.0


@dataclass(frozen=True)
class VerificationReport:
    """闭式解与蒙特卡洛估计的对比报告"""

    label: str
    closed_form: float
    estimate: float
    standard_error: float
    z_score: float
    passed: bool
    threshold: float
    n_paths: int
    seed: int
    log_abs_closed_form: float = math.nan
    log_abs_estimate: float = math.nan

    def to_dict(self) -> Dict[str, object]:
        return {
            "label": self.label,
            "closedForm": self.closed_form,
            "estimate": self.estimate,
            "standardError": self.standard_error,
            "zScore": self.z_score,
            "passed": self.passed,
            "threshold": self.threshold,
            "nPaths": self.n_paths,
            "seed": self.seed,
            "logAbsClosedForm": self.log_abs_closed_form,
            "logAbsEstimate": self.log_abs_estimate,
        }


@dataclass
class GridSearchResult:
    """暴力网格搜索结果"""

    weights: Tuple[float, float, float]
    table: pd.DataFrame  # 每个网格点的权重、估计值与标准误
    on_boundary: bool
    closed_form_weights: Tuple[float, float, float]
    max_steps: Dict[str, float] = field(default_factory=dict)  # 各坐标的网格步长

    def within_one_step(self) -> bool:
        """argmax 是否落在闭式最优解一个网格步长以内"""
        for i, name in enumerate(("pi1", "pi2", "pi3")):
            step = self.max_steps.get(name)
            if step is None:
                continue
            if abs(self.weights[i] - self.closed_form_weights[i]) > step * (1 + 1e-9):
                return False
        return True


@dataclass
class PricePanel:
    """对齐后的月度价格与无风险利率面板"""

    dates: pd.Index  # 日期，或模拟数据的期数
    index: pd.Series
    green: pd.Series
    brown: pd.Series
    rf: pd.Series  # 每期（月度）无风险收益率
    tickers: Tuple[str, str, str] = ("index", "green", "brown")

    @property
    def n_returns(self) -> int:
        return len(self.dates) - 1

    def log_returns(self) -> pd.DataFrame:
        """三条价格序列的月度对数收益率"""
        prices = pd.DataFrame({"index": self.index, "green": self.green, "brown": self.brown}, index=self.dates)
        return np.log(prices).diff().dropna()


@dataclass
class EstimatedParams:
    """估计得到的模型参数及其标准误"""

    params: ModelParams
    standard_errors: Dict[str, float]
    n_observations: int
    diagnostics: Dict[str, float] = field(default_factory=dict)

    def to_dict(self) -> Dict[str, object]:
        data: Dict[str, object] = dict(self.params.to_dict())
        data["standardErrors"] = dict(self.standard_errors)
        data["nObservations"] = self.n_observations
        data["diagnostics"] = dict(self.diagnostics)
        return data
