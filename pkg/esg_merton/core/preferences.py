# core/preferences.py
"""多元CRRA效用、风险厌恶诊断与ESG评分"""

import math
from typing import Dict, Mapping, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from ..errors import DomainError, RatingParseError
from ..models import EsgScoreTable, RiskAversionProfile
from ..models_extended import IndifferenceCurve, RiskAversionReport
from ..utils.log import logger

__all__ = ["PreferenceManager", "ATTRIBUTES"]

ATTRIBUTES = ("m", "g", "b")
DEFAULT_TOP_N = 10


def _attribute_index(name: str) -> int:
    if name not in ATTRIBUTES:
        raise DomainError(f"未知属性 {name}，应为 m/g/b")
    return ATTRIBUTES.index(name)


def _positive_point(x: Sequence[float]) -> np.ndarray:
    point = np.asarray(x, dtype=float)
    if point.shape != (3,) or np.any(~(point > 0)) or not np.all(np.isfinite(point)):
        raise DomainError(f"效用属性必须为三个正数: {x}")
    return point


class PreferenceManager:
    """偏好管理器：效用函数 u = X_m^a_m/a_m * X_g^a_g/a_g * X_b^a_b/a_b 及相关诊断"""

    def __init__(self, config: Optional[dict] = None):
        self.config = config or {}
        ratings_config = self.config.get("RATINGS", {})
        self.top_n = int(ratings_config.get("TOP_N", DEFAULT_TOP_N))

    # ===== 效用 =====

    def utility_eval(self, profile: RiskAversionProfile, xm, xg, xb):
        """计算效用，支持numpy数组广播"""
        profile.validate_nonzero()
        arrays = [np.asarray(x, dtype=float) for x in (xm, xg, xb)]
        if any(np.any(~(a > 0)) for a in arrays):
            raise DomainError("效用属性必须为正数")
        am, ag, ab = profile.as_tuple()
        value = arrays[0] ** am * arrays[1] ** ag * arrays[2] ** ab / (am * ag * ab)
        return float(value) if np.ndim(value) == 0 else value

    def log_abs_utility(self, profile: RiskAversionProfile, log_xm, log_xg, log_xb) -> Tuple[np.ndarray, float]:
        """log|u| 与 u 的符号；输入为各属性的对数"""
        profile.validate_nonzero()
        am, ag, ab = profile.as_tuple()
        prod = am * ag * ab
        log_abs = (am * np.asarray(log_xm, dtype=float)
                   + ag * np.asarray(log_xg, dtype=float)
                   + ab * np.asarray(log_xb, dtype=float)
                   - math.log(abs(prod)))
        return log_abs, math.copysign(1.0, prod)

    def utility_gradient(self, profile: RiskAversionProfile, x: Sequence[float]) -> np.ndarray:
        """一阶偏导 du/dx_i = a_i * u / x_i"""
        point = _positive_point(x)
        u = self.utility_eval(profile, *point)
        return profile.as_array() * u / point

    def utility_hessian(self, profile: RiskAversionProfile, x: Sequence[float]) -> np.ndarray:
        """二阶偏导矩阵 H = u * D^-1 (a a^T - diag(a)) D^-1，D = diag(x)"""
        point = _positive_point(x)
        u = self.utility_eval(profile, *point)
        alpha = profile.as_array()
        core = np.outer(alpha, alpha) - np.diag(alpha)
        return u * core / np.outer(point, point)

    def third_cross_partial(self, profile: RiskAversionProfile, x: Sequence[float]) -> float:
        point = _positive_point(x)
        u = self.utility_eval(profile, *point)
        am, ag, ab = profile.as_tuple()
        return float(am * ag * ab * u / point.prod())

    def risk_aversion_report(self, profile: RiskAversionProfile,
                             point: Sequence[float] = (1.0, 1.0, 1.0)) -> RiskAversionReport:
        """单调性、KM/FR/S 风险厌恶判定与各属性的 RRA/ARA"""
        profile.validate_nonzero()
        x = _positive_point(point)
        am, ag, ab = profile.as_tuple()

        km_conditions = {
            "alpha_m<1": am < 1,
            "alpha_g<1": ag < 1,
            "alpha_b<1": ab < 1,
            "alpha_m+alpha_g<1": am + ag < 1,
            "alpha_m+alpha_b<1": am + ab < 1,
            "alpha_g+alpha_b<1": ag + ab < 1,
            "alpha_m+alpha_g+alpha_b<1": am + ag + ab < 1,
        }
        alphas = profile.as_tuple()
        monotonic = all(a < 0 for a in alphas) or all(a > 0 for a in alphas)
        rra = tuple(1.0 - a for a in alphas)
        ara = tuple((1.0 - a) / xi for a, xi in zip(alphas, x))

        return RiskAversionReport(
            monotonic=monotonic,
            km=all(km_conditions.values()),
            fr=all(a < 0 for a in alphas),
            s=self.third_cross_partial(profile, x) > 0,
            rra=rra,
            ara=ara,
            point=tuple(float(v) for v in x),
            km_conditions=km_conditions,
        )

    # ===== kappa 参数化 =====

    @staticmethod
    def _warn_unordered(scores: EsgScoreTable):
        if not scores.is_ordered:
            logger.warning(
                f"[preferences] ESG评分不满足 E_b <= E_m <= E_g "
                f"({scores.e_brown}, {scores.e_market}, {scores.e_green})，绿/棕标签可能颠倒"
            )

    def kappa_map(self, alpha_m: float, kappa: float, scores: EsgScoreTable) -> RiskAversionProfile:
        """alpha_i = alpha_m * exp(kappa * (E_m - E_i))"""
        if not math.isfinite(alpha_m) or alpha_m >= 0:
            raise DomainError(f"alpha_m 必须为负数，当前为 {alpha_m}")
        if not math.isfinite(kappa) or kappa < 0:
            raise DomainError(f"kappa 必须为非负数，当前为 {kappa}")
        self._warn_unordered(scores)
        return RiskAversionProfile(
            alpha_m=alpha_m,
            alpha_g=alpha_m * math.exp(kappa * (scores.e_market - scores.e_green)),
            alpha_b=alpha_m * math.exp(kappa * (scores.e_market - scores.e_brown)),
        )

    def implied_kappa(self, profile: RiskAversionProfile, scores: EsgScoreTable, attribute: str = "g") -> float:
        """由观测到的 alpha_g（或 alpha_b）反推 kappa"""
        if attribute not in ("g", "b"):
            raise DomainError(f"只能由 g 或 b 反推 kappa，当前为 {attribute}")
        alpha_i = profile.alpha_g if attribute == "g" else profile.alpha_b
        gap = scores.e_market - scores.score_of(attribute)
        if gap == 0:
            raise DomainError("E_i 与 E_m 相同，kappa 无法识别")
        ratio = alpha_i / profile.alpha_m
        if not ratio > 0:
            raise DomainError(f"alpha_{attribute} 与 alpha_m 符号不同，kappa 无定义")
        return math.log(ratio) / gap

    @staticmethod
    def rra_score_sensitivity(kappa: float, alpha_i: float) -> float:
        """dRRA_i/dE_i = kappa * alpha_i；除以 1 - RRA_i = alpha_i 即得 kappa"""
        return kappa * alpha_i

    def mrs_prs(self, profile: RiskAversionProfile, i: str, j: str, xi: float, xj: float) -> Dict[str, float]:
        """边际替代率 MRS_ij 与百分比替代率 PRS_ij"""
        if i == j:
            raise DomainError("MRS/PRS 需要两个不同的属性")
        if not (xi > 0 and xj > 0):
            raise DomainError(f"属性取值必须为正: {xi}, {xj}")
        profile.validate_nonzero()
        alpha = profile.as_tuple()
        a_i, a_j = alpha[_attribute_index(i)], alpha[_attribute_index(j)]
        return {"mrs": a_i * xj / (a_j * xi), "prs": a_j / a_i}

    def indifference_curve_level(self, profile: RiskAversionProfile, utility_level: float, xm: float = 1.0,
                                 kappa: Optional[float] = None,
                                 scores: Optional[EsgScoreTable] = None) -> IndifferenceCurve:
        """固定效用水平与 X_m 时 X_g、X_b 的无差异曲线 xg^p1 * xb^p2 = C

        给出 kappa 与 scores 时，先用 kappa_map 由 profile.alpha_m 生成偏好。
        """
        if kappa is not None:
            if scores is None:
                raise DomainError("指定 kappa 时必须提供ESG评分")
            profile = self.kappa_map(profile.alpha_m, kappa, scores)
        profile.validate_nonzero()
        if not xm > 0:
            raise DomainError(f"X_m 必须为正，当前为 {xm}")
        if not utility_level < 0:
            raise DomainError(f"效用水平必须为负数，当前为 {utility_level}")
        am, ag, ab = profile.as_tuple()
        scaled = am * ag * ab * utility_level
        if not scaled > 0:
            raise DomainError("alpha_m*alpha_g*alpha_b*u 必须为正")
        return IndifferenceCurve(
            p1=ag / am,
            p2=ab / am,
            constant=scaled ** (1.0 / am) / xm,
            xm=xm,
            utility_level=utility_level,
            kappa=kappa,
        )

    # ===== ESG 评分 =====

    def esg_scores_from_ratings(self, ratings: pd.DataFrame, letter_map: Mapping[str, float],
                                market_company: Optional[str] = None) -> Tuple[pd.Series, float]:
        """字母评级映射为分数并按公司取平均

        Args:
            ratings: 含 company、rating 列的评级表
            letter_map: 字母到分数的映射
            market_company: 代表市场的名称；为空时市场分数取各公司平均分的均值

        Returns:
            (按公司名索引的平均分, 市场分数)
        """
        if ratings.empty:
            raise RatingParseError("评级数据为空")
        letters = ratings["rating"].astype(str).str.strip().str.upper()
        lookup = {str(k).upper(): float(v) for k, v in letter_map.items()}
        scores = letters.map(lookup)
        unknown = scores.isna().to_numpy()
        if unknown.any():
            row = int(unknown.argmax()) + 1
            raise RatingParseError(f"未知评级 {letters.iloc[row - 1]!r}", row=row)

        frame = pd.DataFrame({"company": ratings["company"].to_numpy(), "score": scores.to_numpy()})
        company_scores = frame.groupby("company", sort=True)["score"].mean()

        if market_company:
            if market_company not in company_scores.index:
                raise DomainError(f"评级数据中没有市场 {market_company}")
            market_score = float(company_scores[market_company])
            company_scores = company_scores.drop(market_company)
        else:
            market_score = float(company_scores.mean())
        logger.info(f"[preferences] 已计算 {len(company_scores)} 家公司的ESG分数，市场分数 {market_score:.4f}")
        return company_scores, market_score

    def score_table_for(self, company_scores: pd.Series, market_score: float,
                        green: str, brown: str) -> EsgScoreTable:
        """由选定的绿色、棕色公司构建评分表"""
        for name in (green, brown):
            if name not in company_scores.index:
                raise DomainError(f"评级数据中没有公司 {name}")
        table = EsgScoreTable(
            e_market=float(market_score),
            e_green=float(company_scores[green]),
            e_brown=float(company_scores[brown]),
        )
        self._warn_unordered(table)
        return table

    def rank_companies(self, company_scores: pd.Series, top: Optional[int] = None) -> Tuple[pd.Series, pd.Series]:
        """平均分最高的 top 家（绿色）与最低的 top 家（棕色），均按分数降序"""
        top = self.top_n if top is None else int(top)
        if top < 1:
            raise DomainError(f"top 至少为1，当前为 {top}")
        ordered = company_scores.sort_index().sort_values(ascending=False, kind="mergesort")
        return ordered.head(top), ordered.tail(top)
