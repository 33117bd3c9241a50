# models.py

from dataclasses import dataclass, field, replace
from typing import Dict, Tuple
import math

import numpy as np
import pandas as pd

from .errors import DomainError

__all__ = [
    "ModelParams",
    "SyntheticCoefficients",
    "IndexDynamics",
    "PathBundle",
    "RiskAversionProfile",
    "EsgScoreTable",
    "PARAM_JSON_FIELDS",
]

# 参数文件中的字段名（JSON键）与模型属性名的对应关系
PARAM_JSON_FIELDS: Dict[str, str] = {
    "r": "r",
    "lambda1": "lambda1",
    "lambdaG": "lambda_g",
    "lambdaB": "lambda_b",
    "sigma1": "sigma1",
    "sigma2": "sigma2",
    "sigma3": "sigma3",
    "rho12": "rho12",
    "rho13": "rho13",
    "thetaM": "theta_m",
    "thetaG": "theta_g",
    "thetaB": "theta_b",
}

THETA_TOLERANCE = 1e-12


@dataclass(frozen=True)
class ModelParams:
    """单因子ESG市场模型参数（时间单位：月）"""

    r: float  # 每期无风险利率
    lambda1: float  # 市场风险价格
    lambda_g: float  # 绿色风险价格
    lambda_b: float  # 棕色风险价格
    sigma1: float  # 指数波动率
    sigma2: float  # 绿色股票波动率
    sigma3: float  # 棕色股票波动率
    rho12: float  # 指数与绿色股票的相关系数
    rho13: float  # 指数与棕色股票的相关系数
    theta_m: float = 1.0  # 现金收益分配给市场指数的比例
    theta_g: float = 0.0  # 现金收益分配给绿色指数的比例
    theta_b: float = 0.0  # 现金收益分配给棕色指数的比例

    def validate(self) -> "ModelParams":
        """检查参数不变量，不满足时抛出 DomainError"""
        for name in ("sigma1", "sigma2", "sigma3"):
            value = getattr(self, name)
            if not math.isfinite(value) or value <= 0:
                raise DomainError(f"{name} 必须为正数，当前为 {value}")
        for name in ("rho12", "rho13"):
            value = getattr(self, name)
            if not math.isfinite(value) or abs(value) >= 1:
                raise DomainError(f"{name} 必须位于 (-1, 1) 区间，当前为 {value}")
        for name in ("r", "lambda1", "lambda_g", "lambda_b", "theta_m", "theta_g", "theta_b"):
            if not math.isfinite(getattr(self, name)):
                raise DomainError(f"{name} 必须为有限数值")
        theta_sum = self.theta_m + self.theta_g + self.theta_b
        if abs(theta_sum - 1.0) > THETA_TOLERANCE:
            raise DomainError(f"theta 三者之和必须为1，当前为 {theta_sum!r}")
        return self

    @property
    def theta(self) -> Tuple[float, float, float]:
        return (self.theta_m, self.theta_g, self.theta_b)

    @property
    def has_default_theta(self) -> bool:
        """现金收益是否全部计入市场指数"""
        return self.theta == (1.0, 0.0, 0.0)

    def with_theta(self, theta_m: float, theta_g: float, theta_b: float) -> "ModelParams":
        return replace(self, theta_m=theta_m, theta_g=theta_g, theta_b=theta_b).validate()

    def replace(self, **changes) -> "ModelParams":
        return replace(self, **changes)

    def to_dict(self) -> Dict[str, float]:
        """转为参数文件格式（JSON键名）"""
        return {json_key: getattr(self, attr) for json_key, attr in PARAM_JSON_FIELDS.items()}

    @classmethod
    def from_dict(cls, data: Dict[str, float]) -> "ModelParams":
        """从参数文件格式构建，忽略多余的键"""
        missing = [key for key in PARAM_JSON_FIELDS if key not in data and key not in ("thetaM", "thetaG", "thetaB")]
        if missing:
            raise DomainError(f"参数缺少字段: {', '.join(missing)}")
        kwargs = {}
        for json_key, attr in PARAM_JSON_FIELDS.items():
            if json_key in data:
                kwargs[attr] = float(data[json_key])
        return cls(**kwargs).validate()


@dataclass(frozen=True)
class SyntheticCoefficients:
    """对冲市场风险后的合成资产系数"""

    beta2: float  # 绿色股票的单因子beta
    beta3: float  # 棕色股票的单因子beta
    sigma_g: float  # 绿色合成资产的非市场波动率
    sigma_b: float  # 棕色合成资产的非市场波动率


@dataclass(frozen=True)
class IndexDynamics:
    """常数权重策略下三个财富指数的对数漂移与波动率（每期）"""

    drift_m: float
    drift_g: float
    drift_b: float
    vol_m: float
    vol_g: float
    vol_b: float
    wealth_drift: float  # 由股票层面财富方程直接得到的 log W 漂移
    wealth_vol_m: float  # log W 对 z_m 的暴露
    wealth_vol_g: float
    wealth_vol_b: float

    @property
    def drifts(self) -> np.ndarray:
        return np.array([self.drift_m, self.drift_g, self.drift_b])

    @property
    def vols(self) -> np.ndarray:
        return np.array([self.vol_m, self.vol_g, self.vol_b])


@dataclass
class PathBundle:
    """蒙特卡洛路径集合

    各 log_* 数组形状为 (n_paths, n_steps + 1)，第0列为起点；
    z_* 为 (n_paths, n_steps) 的标准正态增量。
    """

    times: np.ndarray
    log_xm: np.ndarray
    log_xg: np.ndarray
    log_xb: np.ndarray
    log_w: np.ndarray
    z_m: np.ndarray
    z_g: np.ndarray
    z_b: np.ndarray
    w0: float = 1.0
    seed: Dict[str, object] = field(default_factory=dict)

    @property
    def n_paths(self) -> int:
        return self.log_w.shape[0]

    @property
    def n_steps(self) -> int:
        return self.log_w.shape[1] - 1

    def terminal_ratios(self) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        """各路径终点的 X_T / X_0"""
        return (
            np.exp(self.log_xm[:, -1]),
            np.exp(self.log_xg[:, -1]),
            np.exp(self.log_xb[:, -1]),
        )

    def reconstructed_log_wealth(self) -> np.ndarray:
        """按三指数乘积恒等式重建的 log W 路径"""
        return math.log(self.w0) + self.log_xm + self.log_xg + self.log_xb

    def to_frame(self) -> pd.DataFrame:
        """展开为 path,step,logXm,logXg,logXb,logW 长表"""
        n_paths, n_cols = self.log_w.shape
        path_idx, step_idx = np.meshgrid(np.arange(n_paths), np.arange(n_cols), indexing="ij")
        return pd.DataFrame({
            "path": path_idx.ravel(),
            "step": step_idx.ravel(),
            "logXm": self.log_xm.ravel(),
            "logXg": self.log_xg.ravel(),
            "logXb": self.log_xb.ravel(),
            "logW": self.log_w.ravel(),
        })

    def equals(self, other: "PathBundle") -> bool:
        """逐位比较两个路径集合"""
        arrays = ("times", "log_xm", "log_xg", "log_xb", "log_w", "z_m", "z_g", "z_b")
        return all(np.array_equal(getattr(self, name), getattr(other, name)) for name in arrays)


@dataclass(frozen=True)
class RiskAversionProfile:
    """三指数的效用曲率参数 (alpha_m, alpha_g, alpha_b)"""

    alpha_m: float
    alpha_g: float
    alpha_b: float

    @classmethod
    def uniform(cls, alpha: float) -> "RiskAversionProfile":
        """Merton 情形：三者相同"""
        return cls(alpha, alpha, alpha)

    def as_tuple(self) -> Tuple[float, float, float]:
        return (self.alpha_m, self.alpha_g, self.alpha_b)

    def as_array(self) -> np.ndarray:
        return np.array(self.as_tuple(), dtype=float)

    @property
    def is_valid(self) -> bool:
        """宽松检查：三个参数均严格为负"""
        return all(a < 0 for a in self.as_tuple())

    @property
    def is_admissible(self) -> bool:
        """工作区间 alpha_b <= alpha_m <= alpha_g < 0"""
        return self.alpha_b <= self.alpha_m <= self.alpha_g < 0

    def validate_nonzero(self) -> "RiskAversionProfile":
        for name, value in zip(("alpha_m", "alpha_g", "alpha_b"), self.as_tuple()):
            if not math.isfinite(value) or value == 0:
                raise DomainError(f"{name} 必须为非零有限数，当前为 {value}")
        return self

    def validate_negative(self) -> "RiskAversionProfile":
        self.validate_nonzero()
        if not self.is_valid:
            raise DomainError(f"风险厌恶参数必须全部为负: {self.as_tuple()}")
        return self


@dataclass(frozen=True)
class EsgScoreTable:
    """ESG评分：市场、绿色资产、棕色资产（1-10分，可为平均后的实数）"""

    e_market: float
    e_green: float
    e_brown: float

    def __post_init__(self):
        for name in ("e_market", "e_green", "e_brown"):
            value = getattr(self, name)
            if not math.isfinite(value) or not 1.0 <= value <= 10.0:
                raise DomainError(f"{name} 必须位于 [1, 10] 区间，当前为 {value}")

    @property
    def is_ordered(self) -> bool:
        """绿/棕标签是否有意义：e_brown <= e_market <= e_green"""
        return self.e_brown <= self.e_market <= self.e_green

    def to_dict(self) -> Dict[str, float]:
        return {"eMarket": self.e_market, "eGreen": self.e_green, "eBrown": self.e_brown}

    @classmethod
    def from_dict(cls, data: Dict[str, float]) -> "EsgScoreTable":
        try:
            return cls(float(data["eMarket"]), float(data["eGreen"]), float(data["eBrown"]))
        except KeyError as e:
            raise DomainError(f"评分缺少字段: {e.args[0]}") from e

    def score_of(self, attribute: str) -> float:
        """按属性名 m/g/b 取评分"""
        mapping = {"m": self.e_market, "g": self.e_green, "b": self.e_brown}
        if attribute not in mapping:
            raise DomainError(f"未知属性 {attribute}，应为 m/g/b")
        return mapping[attribute]
