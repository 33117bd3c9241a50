# core/wel.py
"""绿色指数财富等价损失（GWEL）"""

import math
from typing import Optional, Sequence

import numpy as np
import pandas as pd

from ..errors import DomainError
from ..models import EsgScoreTable, ModelParams, RiskAversionProfile
from ..models_extended import Strategy, WelReport
from ..utils.log import logger
from .allocation import AllocationManager

__all__ = ["WelManager", "KAPPA_WEL_COLUMNS", "NO_GREEN_COLUMNS"]

CONSISTENCY_TOLERANCE = 1e-12

KAPPA_WEL_COLUMNS = ["kappa", "alphaG", "alphaB", "q", "logRetention"]
NO_GREEN_COLUMNS = ["alphaG", "q"]


def _check_horizon(horizon_t: float):
    if not math.isfinite(horizon_t) or horizon_t <= 0:
        raise DomainError(f"投资期限必须为正，当前为 {horizon_t}")


class WelManager:
    """GWEL 管理器

    q 满足 J(X_m, X_g(1-q), X_b, 0) = J^s(X_m, X_g, X_b, 0)，
    即 log(1 - q) = (b* - b) T / alpha_g。
    """

    def __init__(self, config: Optional[dict] = None, allocation: Optional[AllocationManager] = None):
        self.config = config or {}
        self.allocation = allocation or AllocationManager(self.config)

    def fixed_weight_value(self, params: ModelParams, profile: RiskAversionProfile, weights) -> float:
        return self.allocation.fixed_weight_value(params, profile, weights)

    def _report(self, b_star: float, b_opt: float, alpha_g: float, horizon_t: float,
                strategy: Strategy) -> WelReport:
        log_retention = (b_star - b_opt) * horizon_t / alpha_g
        # 最优策略处浮点误差可能给出极小的正值
        log_retention = min(log_retention, 0.0)
        q = -math.expm1(log_retention)
        logger.debug(f"[wel] {Strategy.get_name(strategy)}: T={horizon_t:g}，GWEL={q:.6g}")
        return WelReport(
            b_star=b_star,
            b_opt=b_opt,
            q=q,
            log_retention=log_retention,
            strategy=strategy,
            horizon=horizon_t,
        )

    def gwel(self, params: ModelParams, profile: RiskAversionProfile, sub_weights, horizon_t: float,
             strategy: Strategy = Strategy.CUSTOM) -> WelReport:
        """任意常数权重次优策略的 GWEL"""
        profile.validate_negative()
        _check_horizon(horizon_t)
        b_star = self.fixed_weight_value(params, profile, sub_weights)
        b_opt = self.allocation.value_coefficient(params, profile)
        return self._report(b_star, b_opt, profile.alpha_g, horizon_t, strategy)

    @staticmethod
    def merton_strategy_coefficient(params: ModelParams, profile: RiskAversionProfile) -> float:
        """按 alpha_m 统一计算的 Merton 权重在 profile 下的值函数系数 b^s"""
        am, ag, ab = profile.as_tuple()
        one_m = 1.0 - am
        g2 = params.lambda_g ** 2 * params.sigma2 ** 2
        b2 = params.lambda_b ** 2 * params.sigma3 ** 2
        return (0.5 * params.lambda1 ** 2 * params.sigma1 ** 2 * am / one_m
                + g2 * ag / one_m - 0.5 * g2 * ag * (1.0 - ag) / one_m ** 2
                + b2 * ab / one_m - 0.5 * b2 * ab * (1.0 - ab) / one_m ** 2
                + (params.theta_m * am + params.theta_g * ag + params.theta_b * ab) * params.r)

    def q_merton(self, params: ModelParams, profile: RiskAversionProfile, horizon_t: float) -> WelReport:
        """采用 Merton 权重（统一取 alpha_m）时的 GWEL"""
        profile.validate_negative()
        _check_horizon(horizon_t)
        b_star = self.merton_strategy_coefficient(params, profile)
        merton = self.allocation.optimal_weights(params, RiskAversionProfile.uniform(profile.alpha_m))
        generic = self.fixed_weight_value(params, profile, merton.weights)
        if abs(generic - b_star) > CONSISTENCY_TOLERANCE * max(1.0, abs(b_star)):
            logger.warning(f"[wel] b^s 闭式解与常数权重公式不一致: {b_star!r} vs {generic!r}")
        b_opt = self.allocation.value_coefficient(params, profile)
        return self._report(b_star, b_opt, profile.alpha_g, horizon_t, Strategy.MERTON)

    def q_no_green(self, params: ModelParams, alpha_g: float, horizon_t: float) -> float:
        """不投资绿色股票时的 GWEL：1 - exp(-lambda_g^2 sigma2^2 T / (2 (1 - alpha_g)))"""
        if not math.isfinite(alpha_g) or alpha_g >= 0:
            raise DomainError(f"alpha_g 必须为负数，当前为 {alpha_g}")
        _check_horizon(horizon_t)
        params.validate()
        if params.lambda_g == 0:
            return 0.0
        return -math.expm1(-0.5 * params.lambda_g ** 2 * params.sigma2 ** 2 * horizon_t / (1.0 - alpha_g))

    def no_green_report(self, params: ModelParams, profile: RiskAversionProfile, horizon_t: float) -> WelReport:
        """pi2 = 0 约束下最优策略的完整 GWEL 报告"""
        weights = self.allocation.restricted_weights(params, profile, pi2=0.0)
        return self.gwel(params, profile, weights.weights, horizon_t, strategy=Strategy.NO_GREEN)

    def kappa_wel_sweep(self, params: ModelParams, alpha_m: float, kappas: Sequence[float],
                        scores: EsgScoreTable, horizon_t: float) -> pd.DataFrame:
        """kappa 网格上 Merton 策略的 GWEL"""
        rows = []
        for kappa in kappas:
            profile = self.allocation.preferences.kappa_map(alpha_m, float(kappa), scores)
            report = self.q_merton(params, profile, horizon_t)
            rows.append([float(kappa), profile.alpha_g, profile.alpha_b, report.q, report.log_retention])
        frame = pd.DataFrame(rows, columns=KAPPA_WEL_COLUMNS)
        if len(frame) and (frame["q"] >= 1.0).any():
            logger.info("[wel] 部分 kappa 下 q 在双精度下已饱和为1，请参考 logRetention 列")
        return frame

    def no_green_sweep(self, params: ModelParams, alpha_g_grid: Sequence[float], horizon_t: float) -> pd.DataFrame:
        grid = np.asarray(alpha_g_grid, dtype=float)
        q = [self.q_no_green(params, float(ag), horizon_t) for ag in grid]
        return pd.DataFrame({"alphaG": grid, "q": q}, columns=NO_GREEN_COLUMNS)
