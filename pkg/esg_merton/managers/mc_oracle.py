# managers/mc_oracle.py
"""蒙特卡洛校验器 - 用模拟独立检验期望效用、最优权重与GWEL的闭式解"""
import itertools
import math
from typing import Dict, Mapping, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from scipy.special import logsumexp

from ..core.allocation import AllocationManager
from ..core.market_model import MarketModel, SeedLike
from ..core.wel import WelManager
from ..errors import DomainError
from ..models import ModelParams, RiskAversionProfile
from ..models_extended import GridSearchResult, McEstimate, VerificationReport
from ..utils.log import logger

__all__ = ["MonteCarloOracle"]

# 校验配置默认值
DEFAULT_Z_THRESHOLD = 3.0  # 通过阈值（标准误倍数）
DEFAULT_MIN_PATHS = 100  # 最少路径数
DEFAULT_PATHS = 100000  # 默认路径数
DEFAULT_HORIZON = 12.0  # 默认期限（月）
DEFAULT_SEED = 20240101

COORDINATES = ("pi1", "pi2", "pi3")


class MonteCarloOracle:
    """蒙特卡洛校验器

    终值对数指数在常数权重下服从正态分布，按一步精确采样；
    随机数成对取反（对偶变量），期望效用在对数空间累加。
    """

    def __init__(self, config: Optional[dict] = None, market: Optional[MarketModel] = None,
                 allocation: Optional[AllocationManager] = None, wel: Optional[WelManager] = None):
        self.config = config or {}
        self.market = market or MarketModel(self.config)
        self.allocation = allocation or AllocationManager(self.config, market=self.market)
        self.wel = wel or WelManager(self.config, allocation=self.allocation)

        verify_config = self.config.get("VERIFICATION", {})
        self.z_threshold = float(verify_config.get("Z_THRESHOLD", DEFAULT_Z_THRESHOLD))
        self.min_paths = int(verify_config.get("MIN_PATHS", DEFAULT_MIN_PATHS))
        self.default_paths = int(verify_config.get("DEFAULT_PATHS", DEFAULT_PATHS))
        self.default_horizon = float(verify_config.get("DEFAULT_HORIZON", DEFAULT_HORIZON))
        self.default_seed = int(self.config.get("SIMULATION", {}).get("DEFAULT_SEED", DEFAULT_SEED))

    # ===== 采样 =====

    def _path_count(self, n_paths: int) -> int:
        n_paths = int(n_paths)
        if n_paths < self.min_paths:
            raise DomainError(f"路径数至少为 {self.min_paths}，当前为 {n_paths}")
        # 对偶变量成对出现
        return n_paths + (n_paths % 2)

    def _antithetic_pairs(self, n_paths: int) -> Tuple[np.ndarray, np.ndarray]:
        """每块前半与后半互为对偶，返回两组行号"""
        first, second = [], []
        for _, start, rows in self.market._block_layout(n_paths):
            half = rows // 2
            first.append(np.arange(start, start + half))
            second.append(np.arange(start + half, start + rows))
        return np.concatenate(first), np.concatenate(second)

    def _draw(self, n_paths: int, seed: SeedLike) -> np.ndarray:
        return self.market.summed_increments(1, n_paths, seed, antithetic=True)

    def _log_utility_samples(self, params: ModelParams, profile: RiskAversionProfile, weights,
                             horizon_t: float, z_sums: np.ndarray,
                             log_x0: Sequence[float]) -> Tuple[np.ndarray, float]:
        log_ratios = self.market.terminal_log_indexes(params, weights, horizon_t, z_sums, n_steps=1)
        log_terminal = np.asarray(log_x0, dtype=float)[:, None] + log_ratios
        return self.allocation.preferences.log_abs_utility(profile, *log_terminal)

    def _estimate_from_logs(self, log_abs: np.ndarray, sign: float) -> McEstimate:
        first, second = self._antithetic_pairs(log_abs.shape[0])
        log_pairs = np.logaddexp(log_abs[first], log_abs[second]) - math.log(2.0)
        n_pairs = log_pairs.shape[0]

        shift = float(np.max(log_pairs))
        scaled = np.exp(log_pairs - shift)
        mean_scaled = float(scaled.mean())
        sd_scaled = float(scaled.std(ddof=1)) if n_pairs > 1 else 0.0
        relative_error = sd_scaled / math.sqrt(n_pairs) / mean_scaled

        log_abs_estimate = float(logsumexp(log_pairs)) - math.log(n_pairs)
        estimate = sign * math.exp(log_abs_estimate) if log_abs_estimate < 709.0 else sign * math.inf
        return McEstimate(
            estimate=estimate,
            standard_error=abs(estimate) * relative_error,
            log_abs_estimate=log_abs_estimate,
            relative_error=relative_error,
            n_paths=log_abs.shape[0],
            sign=sign,
        )

    # ===== 期望效用 =====

    def expected_utility_mc(self, params: ModelParams, profile: RiskAversionProfile, weights,
                            horizon_t: float, n_paths: int, seed: SeedLike,
                            x0: Sequence[float] = (1.0, 1.0, 1.0)) -> McEstimate:
        """常数权重策略下 E[u(X_T)] 的蒙特卡洛估计

        权重不变时终值对数指数为正态，一步精确采样与 simulate_paths 逐步累加同分布。
        """
        profile.validate_nonzero()
        x0 = np.asarray(x0, dtype=float)
        if x0.shape != (3,) or np.any(~(x0 > 0)):
            raise DomainError(f"初始指数必须为三个正数: {x0}")
        n_paths = self._path_count(n_paths)
        z_sums = self._draw(n_paths, seed)
        log_abs, sign = self._log_utility_samples(params, profile, weights, horizon_t, z_sums, np.log(x0))
        return self._estimate_from_logs(log_abs, sign)

    def closed_form_log_utility(self, params: ModelParams, profile: RiskAversionProfile, weights,
                                horizon_t: float, x0: Sequence[float] = (1.0, 1.0, 1.0)) -> Tuple[float, float]:
        """(log|u(x0) exp(b* T)|, 符号)"""
        b_star = self.allocation.fixed_weight_value(params, profile, weights)
        log_abs, sign = self.allocation.preferences.log_abs_utility(profile, *np.log(np.asarray(x0, dtype=float)))
        return float(log_abs) + b_star * horizon_t, sign

    def closed_form_utility(self, params: ModelParams, profile: RiskAversionProfile, weights,
                            horizon_t: float, x0: Sequence[float] = (1.0, 1.0, 1.0)) -> float:
        """u(x0) * exp(b* T)"""
        b_star = self.allocation.fixed_weight_value(params, profile, weights)
        return self.allocation.preferences.utility_eval(profile, *x0) * math.exp(b_star * horizon_t)

    @staticmethod
    def _relative_z(log_abs_a: float, log_abs_b: float, relative_error: float) -> float:
        """|a|/|b| - 1 以相对标准误为单位"""
        gap = math.expm1(log_abs_a - log_abs_b)
        if relative_error == 0:
            return 0.0 if abs(gap) <= 1e-12 else math.copysign(math.inf, gap)
        return gap / relative_error

    def verify(self, params: ModelParams, profile: RiskAversionProfile, weights=None,
               horizon_t: Optional[float] = None, n_paths: Optional[int] = None,
               seed: Optional[int] = None, label: str = "") -> VerificationReport:
        """比较闭式期望效用与蒙特卡洛估计；weights 为空时检验最优策略的值函数"""
        horizon_t = self.default_horizon if horizon_t is None else float(horizon_t)
        n_paths = self.default_paths if n_paths is None else int(n_paths)
        seed = self.default_seed if seed is None else int(seed)
        if weights is None:
            weights = self.allocation.optimal_weights(params, profile).weights
            label = label or "optimal"
        weights = tuple(float(w) for w in weights)
        label = label or "custom"

        log_cf, sign = self.closed_form_log_utility(params, profile, weights, horizon_t)
        mc = self.expected_utility_mc(params, profile, weights, horizon_t, n_paths, seed)
        z_score = self._relative_z(mc.log_abs_estimate, log_cf, mc.relative_error)
        passed = abs(z_score) <= self.z_threshold

        report = VerificationReport(
            label=label,
            closed_form=sign * math.exp(log_cf) if log_cf < 709.0 else sign * math.inf,
            estimate=mc.estimate,
            standard_error=mc.standard_error,
            z_score=z_score,
            passed=passed,
            threshold=self.z_threshold,
            n_paths=mc.n_paths,
            seed=seed,
            log_abs_closed_form=log_cf,
            log_abs_estimate=mc.log_abs_estimate,
        )
        if passed:
            logger.info(f"[oracle] {label}: z = {z_score:.3f}，校验通过")
        else:
            logger.warning(f"[oracle] {label}: z = {z_score:.3f} 超过阈值 {self.z_threshold}")
        return report

    # ===== 网格搜索 =====

    def grid_search_optimal(self, params: ModelParams, profile: RiskAversionProfile, horizon_t: float,
                            grid: Mapping[str, Sequence[float]], n_paths: int, seed: SeedLike) -> GridSearchResult:
        """公共随机数下对常数权重做暴力网格搜索

        Args:
            grid: 坐标名（pi1/pi2/pi3）到候选值数组的映射，未给出的坐标固定为闭式最优值

        Returns:
            期望效用最大的网格点、全部网格点的估计表以及是否落在网格边界
        """
        unknown = [name for name in grid if name not in COORDINATES]
        if unknown:
            raise DomainError(f"未知坐标 {', '.join(unknown)}，应为 pi1/pi2/pi3")
        closed_form = self.allocation.optimal_weights(params, profile).weights

        axes = []
        for i, name in enumerate(COORDINATES):
            values = np.asarray(grid.get(name, [closed_form[i]]), dtype=float).ravel()
            if values.size == 0:
                raise DomainError(f"{name} 的网格为空")
            axes.append(np.unique(values))

        n_paths = self._path_count(n_paths)
        z_sums = self._draw(n_paths, seed)
        zero_log = np.zeros(3)

        rows = []
        for candidate in itertools.product(*axes):
            log_abs, sign = self._log_utility_samples(params, profile, candidate, horizon_t, z_sums, zero_log)
            mc = self._estimate_from_logs(log_abs, sign)
            rows.append([*candidate, mc.estimate, mc.standard_error, mc.log_abs_estimate, sign])
        table = pd.DataFrame(rows, columns=[*COORDINATES, "estimate", "standardError", "logAbsEstimate", "sign"])

        # 负效用时 |E[u]| 越小越好
        score = table["sign"] * table["logAbsEstimate"]
        best = int(score.to_numpy().argmax())
        weights = tuple(float(table.loc[best, name]) for name in COORDINATES)

        on_boundary = False
        max_steps: Dict[str, float] = {}
        for name, axis in zip(COORDINATES, axes):
            if axis.size < 2:
                continue
            max_steps[name] = float(np.max(np.diff(axis)))
            value = table.loc[best, name]
            if value == axis[0] or value == axis[-1]:
                on_boundary = True
        if on_boundary:
            logger.warning(f"[oracle] 网格搜索的最优点 {weights} 位于网格边界，建议扩大搜索范围")
        else:
            logger.info(f"[oracle] 网格搜索最优点 {weights}，闭式解 {closed_form}")

        return GridSearchResult(
            weights=weights,
            table=table.drop(columns="sign"),
            on_boundary=on_boundary,
            closed_form_weights=closed_form,
            max_steps=max_steps,
        )

    # ===== GWEL 定义检验 =====

    def gwel_definition_check(self, params: ModelParams, profile: RiskAversionProfile, sub_weights,
                              horizon_t: float, n_paths: int, seed: SeedLike) -> Dict[str, object]:
        """绿色指数缩小 (1 - q) 后的最优策略与次优策略应有相同的期望效用"""
        report = self.wel.gwel(params, profile, sub_weights, horizon_t)
        n_paths = self._path_count(n_paths)
        z_sums = self._draw(n_paths, seed)
        optimal = self.allocation.optimal_weights(params, profile).weights

        # 绿色初值取 log(1 - q)，q 饱和时仍可计算
        log_scaled, sign = self._log_utility_samples(
            params, profile, optimal, horizon_t, z_sums, (0.0, report.log_retention, 0.0))
        log_sub, _ = self._log_utility_samples(params, profile, sub_weights, horizon_t, z_sums, np.zeros(3))
        scaled = self._estimate_from_logs(log_scaled, sign)
        suboptimal = self._estimate_from_logs(log_sub, sign)

        combined = math.hypot(scaled.relative_error, suboptimal.relative_error)
        z_score = self._relative_z(scaled.log_abs_estimate, suboptimal.log_abs_estimate, combined)
        return {
            "report": report,
            "scaled_optimal": scaled,
            "suboptimal": suboptimal,
            "z_score": z_score,
            "passed": abs(z_score) <= self.z_threshold,
        }
