# core/allocation.py
"""最优配置闭式解、Merton基准、绿色占优条件与绿-棕权衡求解"""

import math
from typing import Dict, List, Optional, Sequence

import numpy as np
import pandas as pd
from scipy.optimize import brentq

from ..errors import DomainError
from ..models import ModelParams, RiskAversionProfile
from ..models_extended import AllocationResult, DominanceResult, TradeoffPoint, ValueCoefficients
from ..utils.log import logger
from .market_model import MarketModel
from .preferences import PreferenceManager

__all__ = ["AllocationManager", "TRADEOFF_COLUMNS", "SWEEP_COLUMNS"]

DEFAULT_TRADEOFF_TOLERANCE = 1e-12
DEFAULT_DOMINANCE_ALPHA_B = -5.0
DEFAULT_PERTURBATION = 0.01
BRACKET_LIMIT = 1e12  # 数值求根时 alpha_g 的最远搜索范围

TRADEOFF_COLUMNS = ["alphaB", "alphaG", "pi1", "pi2", "pi3", "b"]
SWEEP_COLUMNS = ["label", "alphaM", "alphaG", "alphaB", "pi1", "pi2", "pi3", "piCash", "betaP", "b"]


class AllocationManager:
    """配置管理器"""

    def __init__(self, config: Optional[dict] = None, market: Optional[MarketModel] = None,
                 preferences: Optional[PreferenceManager] = None):
        self.config = config or {}
        self.market = market or MarketModel(self.config)
        self.preferences = preferences or PreferenceManager(self.config)

        alloc_config = self.config.get("ALLOCATION", {})
        self.tradeoff_tolerance = float(alloc_config.get("TRADEOFF_TOLERANCE", DEFAULT_TRADEOFF_TOLERANCE))
        self.dominance_alpha_b = float(alloc_config.get("DOMINANCE_ALPHA_B", DEFAULT_DOMINANCE_ALPHA_B))
        self.perturbation = float(alloc_config.get("PERTURBATION", DEFAULT_PERTURBATION))

    # ===== 最优权重与值函数 =====

    def optimal_weights(self, params: ModelParams, profile: RiskAversionProfile) -> AllocationResult:
        """HJB 方程的最优常数权重"""
        profile.validate_negative()
        syn = self.market.derive_synthetics(params)
        pi2 = params.lambda_g / (math.sqrt(1.0 - params.rho12 ** 2) * (1.0 - profile.alpha_g))
        pi3 = params.lambda_b / (math.sqrt(1.0 - params.rho13 ** 2) * (1.0 - profile.alpha_b))
        pi1 = params.lambda1 / (1.0 - profile.alpha_m) - syn.beta2 * pi2 - syn.beta3 * pi3
        return AllocationResult(pi1=pi1, pi2=pi2, pi3=pi3, beta_p=pi1 + syn.beta2 * pi2 + syn.beta3 * pi3)

    def restricted_weights(self, params: ModelParams, profile: RiskAversionProfile,
                           pi2: float = 0.0) -> AllocationResult:
        """绿色股票权重固定为 pi2 时的最优权重（pi2 = 0 即不投资绿色股票）"""
        profile.validate_negative()
        if not math.isfinite(pi2):
            raise DomainError(f"pi2 必须为有限数值，当前为 {pi2}")
        syn = self.market.derive_synthetics(params)
        pi3 = params.lambda_b / (math.sqrt(1.0 - params.rho13 ** 2) * (1.0 - profile.alpha_b))
        pi1 = params.lambda1 / (1.0 - profile.alpha_m) - syn.beta2 * pi2 - syn.beta3 * pi3
        return AllocationResult(pi1=pi1, pi2=pi2, pi3=pi3, beta_p=pi1 + syn.beta2 * pi2 + syn.beta3 * pi3)

    def value_coefficient(self, params: ModelParams, profile: RiskAversionProfile) -> float:
        """值函数 J = u(X) * exp(b * (T - t)) 中的 b"""
        profile.validate_negative()
        params.validate()
        am, ag, ab = profile.as_tuple()
        return (0.5 * params.lambda1 ** 2 * params.sigma1 ** 2 * am / (1.0 - am)
                + 0.5 * params.lambda_g ** 2 * params.sigma2 ** 2 * ag / (1.0 - ag)
                + 0.5 * params.lambda_b ** 2 * params.sigma3 ** 2 * ab / (1.0 - ab)
                + (params.theta_m * am + params.theta_g * ag + params.theta_b * ab) * params.r)

    def value_function(self, params: ModelParams, profile: RiskAversionProfile,
                       x: Sequence[float], t_remaining: float) -> Dict[str, float]:
        if not t_remaining >= 0:
            raise DomainError(f"剩余期限不能为负，当前为 {t_remaining}")
        b = self.value_coefficient(params, profile)
        u = self.preferences.utility_eval(profile, *x)
        return {"J": u * math.exp(b * t_remaining), "b": b}

    def merton_coefficient(self, params: ModelParams, alpha_m: float) -> float:
        """统一风险厌恶 alpha_m 时的 b_M"""
        params.validate()
        total = (params.lambda1 ** 2 * params.sigma1 ** 2
                 + params.lambda_g ** 2 * params.sigma2 ** 2
                 + params.lambda_b ** 2 * params.sigma3 ** 2)
        return 0.5 * total * alpha_m / (1.0 - alpha_m) + alpha_m * params.r

    def merton_benchmark(self, params: ModelParams, alpha_m: float, x: Sequence[float] = (1.0, 1.0, 1.0),
                         w0: float = 1.0, t_remaining: float = 0.0,
                         profile: Optional[RiskAversionProfile] = None) -> Dict[str, object]:
        """Merton 效用 u_M(W) = a * W^alpha_m / alpha_m 的基准解

        a 由 u_M(W0) = u(X0) 确定；profile 为空时取 alpha_g = alpha_b = alpha_m。
        """
        uniform = RiskAversionProfile.uniform(alpha_m).validate_negative()
        profile = profile or uniform
        if profile.alpha_m != alpha_m:
            raise DomainError("profile.alpha_m 与 alpha_m 不一致")
        point = np.asarray(x, dtype=float)
        if point.shape != (3,) or np.any(~(point > 0)) or not w0 > 0:
            raise DomainError("初始指数与初始财富必须为正")
        if not t_remaining >= 0:
            raise DomainError(f"剩余期限不能为负，当前为 {t_remaining}")

        am, ag, ab = profile.as_tuple()
        a = point[0] ** am * point[1] ** ag * point[2] ** ab / (w0 ** am * ag * ab)
        b_m = self.merton_coefficient(params, alpha_m)
        return {
            "weights": self.optimal_weights(params, uniform),
            "JM": a * w0 ** alpha_m / alpha_m * math.exp(b_m * t_remaining),
            "bM": b_m,
            "a": a,
            "c": w0 / point.prod(),
        }

    def value_coefficients(self, params: ModelParams, profile: RiskAversionProfile,
                           x: Sequence[float] = (1.0, 1.0, 1.0), w0: float = 1.0) -> ValueCoefficients:
        bench = self.merton_benchmark(params, profile.alpha_m, x, w0, profile=profile)
        return ValueCoefficients(b=self.value_coefficient(params, profile), b_m=bench["bM"],
                                 a=bench["a"], c=bench["c"])

    # ===== 绿色占优 =====

    def green_dominance(self, params: ModelParams, profile: Optional[RiskAversionProfile] = None) -> DominanceResult:
        """绿色股票权重是否超过棕色股票

        m <= 1 时对所有满足 alpha_b <= alpha_m <= alpha_g < 0 的偏好成立；
        m > 1 时需要 alpha_b < 1 - m 且 alpha_g > 1 - 1/m + alpha_b/m。
        """
        params.validate()
        if params.lambda_g == 0:
            raise DomainError("lambda_g 为0，m 无定义")
        m = (params.lambda_b / params.lambda_g) * math.sqrt((1.0 - params.rho12 ** 2) / (1.0 - params.rho13 ** 2))

        alpha_b = profile.alpha_b if profile is not None else self.dominance_alpha_b
        alpha_b_threshold = alpha_g_threshold = None
        if m > 1:
            alpha_b_threshold = 1.0 - m
            alpha_g_threshold = 1.0 - 1.0 / m + alpha_b / m

        if profile is not None:
            weights = self.optimal_weights(params, profile)
            greater = weights.pi2 > weights.pi3
        else:
            greater = m <= 1
        logger.info(f"[allocation] m = {m:.6f}，绿色权重{'大于' if greater else '不大于'}棕色权重")
        return DominanceResult(m=m, pi2_greater_than_pi3=greater,
                               alpha_b_threshold=alpha_b_threshold, alpha_g_threshold=alpha_g_threshold)

    # ===== 绿-棕权衡 =====

    def _check_tradeoff_inputs(self, alpha_m: float, alpha_b: float):
        if not math.isfinite(alpha_m) or alpha_m >= 0:
            raise DomainError(f"alpha_m 必须为负数，当前为 {alpha_m}")
        if not math.isfinite(alpha_b) or alpha_b > alpha_m:
            raise DomainError(f"alpha_b 不能大于 alpha_m ({alpha_b} > {alpha_m})")

    def _solve_alpha_g_numeric(self, params: ModelParams, alpha_m: float, alpha_b: float) -> Optional[float]:
        """一般 theta 下对 b(alpha_g) = b_M 数值求根，无解返回 None"""
        b_m = self.merton_coefficient(params, alpha_m)

        def residual(alpha_g: float) -> float:
            return self.value_coefficient(params, RiskAversionProfile(alpha_m, alpha_g, alpha_b)) - b_m

        hi = -1e-12
        f_hi = residual(hi)
        lo = -1.0
        f_lo = residual(lo)
        while f_lo * f_hi > 0 and lo > -BRACKET_LIMIT:
            lo *= 2.0
            f_lo = residual(lo)
        if f_lo * f_hi > 0:
            return None
        if f_hi == 0:
            return hi
        return brentq(residual, lo, hi, xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=500)

    def tradeoff_solve(self, params: ModelParams, alpha_m: float, alpha_b: float) -> TradeoffPoint:
        """给定 alpha_b，求使 b = b_M 的 alpha_g"""
        self._check_tradeoff_inputs(alpha_m, alpha_b)
        params.validate()
        if params.lambda_g == 0 or params.lambda_b == 0:
            return TradeoffPoint(alpha_b=alpha_b, alpha_g=None, allocation=None, b=None,
                                 solved=False, reason="lambda_g 或 lambda_b 为0，权衡关系退化")

        if params.has_default_theta:
            ratio = (params.lambda_b ** 2 * params.sigma3 ** 2) / (params.lambda_g ** 2 * params.sigma2 ** 2)
            y = (1.0 + ratio) * alpha_m / (1.0 - alpha_m) - ratio * alpha_b / (1.0 - alpha_b)
            if y >= 0 or y <= -1:
                return TradeoffPoint(alpha_b=alpha_b, alpha_g=None, allocation=None, b=None,
                                     solved=False, reason=f"alpha_g/(1-alpha_g) = {y:.6g}，alpha_g 不为负")
            alpha_g = y / (1.0 + y)
        else:
            alpha_g = self._solve_alpha_g_numeric(params, alpha_m, alpha_b)
            if alpha_g is None:
                return TradeoffPoint(alpha_b=alpha_b, alpha_g=None, allocation=None, b=None,
                                     solved=False, reason="在 alpha_g < 0 范围内无解")

        profile = RiskAversionProfile(alpha_m, alpha_g, alpha_b)
        b = self.value_coefficient(params, profile)
        gap = abs(b - self.merton_coefficient(params, alpha_m))
        if gap > self.tradeoff_tolerance:
            logger.warning(f"[allocation] 权衡解残差 |b - b_M| = {gap:.3e} 超过容差 {self.tradeoff_tolerance:.1e}")
        return TradeoffPoint(alpha_b=alpha_b, alpha_g=alpha_g,
                             allocation=self.optimal_weights(params, profile), b=b)

    def tradeoff_curve(self, params: ModelParams, alpha_m: float, alpha_b_grid: Sequence[float]) -> List[TradeoffPoint]:
        points = [self.tradeoff_solve(params, alpha_m, float(ab)) for ab in alpha_b_grid]
        solved = sum(p.solved for p in points)
        logger.info(f"[allocation] alpha_m = {alpha_m} 的权衡曲线：{solved}/{len(points)} 个点有解")
        return points

    @staticmethod
    def tradeoff_frame(points: Sequence[TradeoffPoint]) -> pd.DataFrame:
        """权衡曲线转为 alphaB,alphaG,pi1,pi2,pi3,b 表，略去无解的点"""
        rows = [
            [p.alpha_b, p.alpha_g, p.allocation.pi1, p.allocation.pi2, p.allocation.pi3, p.b]
            for p in points if p.solved
        ]
        return pd.DataFrame(rows, columns=TRADEOFF_COLUMNS)

    # ===== 常数权重策略 =====

    def fixed_weight_value(self, params: ModelParams, profile: RiskAversionProfile, weights) -> float:
        """任意常数权重策略的值函数系数 b*，J* = u(X) * exp(b* (T - t))"""
        profile.validate_nonzero()
        pi1, pi2, pi3 = (float(w) for w in weights)
        syn = self.market.derive_synthetics(params)
        am, ag, ab = profile.as_tuple()
        beta_p = pi1 + syn.beta2 * pi2 + syn.beta3 * pi3
        s1_sq = params.sigma1 ** 2
        return (am * params.lambda1 * beta_p * s1_sq
                - 0.5 * am * (1.0 - am) * beta_p ** 2 * s1_sq
                + ag * params.lambda_g * pi2 * params.sigma2 * syn.sigma_g
                - 0.5 * ag * (1.0 - ag) * pi2 ** 2 * syn.sigma_g ** 2
                + ab * params.lambda_b * pi3 * params.sigma3 * syn.sigma_b
                - 0.5 * ab * (1.0 - ab) * pi3 ** 2 * syn.sigma_b ** 2
                + (params.theta_m * am + params.theta_g * ag + params.theta_b * ab) * params.r)

    def optimality_certificate(self, params: ModelParams, profile: RiskAversionProfile,
                               delta: Optional[float] = None) -> Dict[str, object]:
        """对每个最优权重施加 ±delta 扰动，检查 b* 是否严格增大（J* 严格变小）"""
        delta = self.perturbation if delta is None else float(delta)
        if not delta > 0:
            raise DomainError(f"扰动步长必须为正，当前为 {delta}")
        optimal = list(self.optimal_weights(params, profile).weights)
        b_opt = self.fixed_weight_value(params, profile, optimal)

        perturbed = {}
        for i, name in enumerate(("pi1", "pi2", "pi3")):
            for sign, suffix in ((1.0, "+"), (-1.0, "-")):
                weights = list(optimal)
                weights[i] += sign * delta
                perturbed[f"{name}{suffix}"] = self.fixed_weight_value(params, profile, weights)

        passed = all(b > b_opt for b in perturbed.values())
        if not passed:
            logger.warning(f"[allocation] 最优性校验未通过：扰动后 b* 未全部大于 {b_opt!r}")
        return {"b": b_opt, "delta": delta, "perturbed": perturbed, "passed": passed}

    def hjb_residual(self, params: ModelParams, profile: RiskAversionProfile, x: Sequence[float],
                     t_remaining: float, weights=None) -> float:
        """以 value_function 的 J 代入 HJB 算子，weights 为空时取最优权重

        最优权重处结果为0；其他权重下为 J * (b* - b) <= 0。
        """
        value = self.value_function(params, profile, x, t_remaining)
        J, b = value["J"], value["b"]
        if weights is None:
            weights = self.optimal_weights(params, profile).weights
        pi1, pi2, pi3 = (float(w) for w in weights)
        syn = self.market.derive_synthetics(params)
        am, ag, ab = profile.as_tuple()
        beta_p = pi1 + syn.beta2 * pi2 + syn.beta3 * pi3

        # x J_x = a J，x^2 J_xx = a (a - 1) J；J 依赖 T - t，故 J_t = -b J
        xjx, yjy, zjz = am * J, ag * J, ab * J
        xxjxx, yyjyy, zzjzz = am * (am - 1.0) * J, ag * (ag - 1.0) * J, ab * (ab - 1.0) * J
        s1_sq = params.sigma1 ** 2
        return (-b * J
                + xjx * params.lambda1 * s1_sq * beta_p + 0.5 * xxjxx * s1_sq * beta_p ** 2
                + yjy * params.lambda_g * params.sigma2 * syn.sigma_g * pi2 + 0.5 * yyjyy * syn.sigma_g ** 2 * pi2 ** 2
                + zjz * params.lambda_b * params.sigma3 * syn.sigma_b * pi3 + 0.5 * zzjzz * syn.sigma_b ** 2 * pi3 ** 2
                + (xjx * params.theta_m + yjy * params.theta_g + zjz * params.theta_b) * params.r)

    def allocation_sweep(self, params: ModelParams, profiles: Sequence[RiskAversionProfile],
                         labels: Optional[Sequence[object]] = None) -> pd.DataFrame:
        """一组偏好下的最优权重表"""
        if labels is None:
            labels = list(range(len(profiles)))
        if len(labels) != len(profiles):
            raise DomainError("labels 与 profiles 数量不一致")
        rows = []
        for label, profile in zip(labels, profiles):
            weights = self.optimal_weights(params, profile)
            rows.append([label, profile.alpha_m, profile.alpha_g, profile.alpha_b,
                         weights.pi1, weights.pi2, weights.pi3, weights.pi_cash, weights.beta_p,
                         self.value_coefficient(params, profile)])
        return pd.DataFrame(rows, columns=SWEEP_COLUMNS)
