# managers/estimation.py
"""参数估计管理器 - 由价格、利率与评级数据校准模型"""
import math
from pathlib import Path
from typing import Dict, Mapping, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd

from ..core.market_model import MarketModel
from ..core.preferences import PreferenceManager
from ..data import DataManager
from ..data.default_configs import RATING_LETTER_MAP
from ..errors import DomainError, InsufficientDataError
from ..models import EsgScoreTable, ModelParams
from ..models_extended import EstimatedParams, PricePanel
from ..utils.log import logger

__all__ = ["EstimationManager"]

# 估计配置默认值
DEFAULT_MIN_OBSERVATIONS = 24  # 对齐后最少观测（月）数
DEFAULT_CORR_WARN = 0.1  # 绿-棕相关系数偏差的警告阈值
DEFAULT_PERIODS_PER_YEAR = 12  # 年化利率换算为每期利率

PathLike = Union[str, Path]


class EstimationManager:
    """参数估计管理器"""

    def __init__(self, config: Optional[dict] = None, market: Optional[MarketModel] = None,
                 preferences: Optional[PreferenceManager] = None, data_manager: Optional[DataManager] = None):
        self.config = config or {}
        self.market = market or MarketModel(self.config)
        self.preferences = preferences or PreferenceManager(self.config)
        self.data = data_manager or DataManager()

        est_config = self.config.get("ESTIMATION", {})
        self.min_observations = int(est_config.get("MIN_OBSERVATIONS", DEFAULT_MIN_OBSERVATIONS))
        self.corr_warn = float(est_config.get("CORR_WARN", DEFAULT_CORR_WARN))
        self.periods_per_year = int(est_config.get("PERIODS_PER_YEAR", DEFAULT_PERIODS_PER_YEAR))

    # ===== 数据加载 =====

    def load_panel(self, prices_csv: PathLike, rates_csv: PathLike,
                   index: str, green: str, brown: str) -> PricePanel:
        """读取价格与利率文件，按日期内连接为月度面板

        Raises:
            DataParseError: 某行日期或数值无法解析、价格非正
            InsufficientDataError: 对齐后的观测数少于 MIN_OBSERVATIONS
        """
        prices = self.data.read_prices(prices_csv)
        rates = self.data.read_rates(rates_csv)

        tickers = (index, green, brown)
        if len(set(tickers)) != 3:
            raise DomainError(f"指数、绿色、棕色代码必须互不相同: {tickers}")
        available = set(prices["ticker"])
        missing = [t for t in tickers if t not in available]
        if missing:
            raise DomainError(f"价格文件中没有代码: {', '.join(missing)}")

        wide = prices.pivot(index="date", columns="ticker", values="adj_close")[list(tickers)].dropna()
        merged = wide.join(rates.set_index("date")["yield_annualized"], how="inner").sort_index()

        if len(merged) < self.min_observations:
            raise InsufficientDataError(len(merged), self.min_observations)

        dates = pd.DatetimeIndex(merged.index)
        logger.info(f"[estimation] 面板 {dates[0].date()} 至 {dates[-1].date()}，"
                    f"共 {len(merged)} 个观测、{len(merged) - 1} 个月度收益")
        return PricePanel(
            dates=dates,
            index=merged[index],
            green=merged[green],
            brown=merged[brown],
            rf=merged["yield_annualized"] / self.periods_per_year,
            tickers=tickers,
        )

    def load_ratings(self, csv_path: PathLike) -> pd.DataFrame:
        return self.data.read_ratings(csv_path)

    def score_table(self, ratings: pd.DataFrame, green: str, brown: str,
                    letter_map: Optional[Mapping[str, float]] = None,
                    market_company: Optional[str] = None) -> Tuple[EsgScoreTable, pd.Series]:
        """评级表转为 (评分表, 各公司平均分)"""
        company_scores, market_score = self.preferences.esg_scores_from_ratings(
            ratings, letter_map or RATING_LETTER_MAP, market_company=market_company)
        table = self.preferences.score_table_for(company_scores, market_score, green, brown)
        return table, company_scores

    # ===== 矩估计 =====

    def estimate_sigmas_rhos(self, panel: PricePanel) -> Dict[str, object]:
        """月度对数收益的样本标准差、与指数的相关系数及平均无风险利率

        Returns:
            dict: {moments, sigmas, rhos, r, n, standard_errors, corr_green_brown}
        """
        returns = panel.log_returns()
        n = len(returns)
        if n < 2:
            raise InsufficientDataError(n, 2)
        sigmas = returns.std(ddof=1).to_numpy()
        if np.any(~(sigmas > 0)):
            raise DomainError(f"收益率方差为0，无法估计: {dict(zip(returns.columns, sigmas))}")
        corr = returns.corr().to_numpy()
        rho12, rho13 = float(corr[0, 1]), float(corr[0, 2])

        root = math.sqrt(n - 1)
        standard_errors = {
            "sigma1": sigmas[0] / math.sqrt(2 * (n - 1)),
            "sigma2": sigmas[1] / math.sqrt(2 * (n - 1)),
            "sigma3": sigmas[2] / math.sqrt(2 * (n - 1)),
            "rho12": (1.0 - rho12 ** 2) / root,
            "rho13": (1.0 - rho13 ** 2) / root,
        }
        return {
            "moments": returns.mean().to_numpy(),
            "sigmas": sigmas,
            "rhos": (rho12, rho13),
            "r": float(panel.rf.mean()),
            "n": n,
            "standard_errors": {k: float(v) for k, v in standard_errors.items()},
            "corr_green_brown": float(corr[1, 2]),
        }

    @staticmethod
    def backout_lambdas(moments: Sequence[float], sigmas: Sequence[float],
                        rhos: Sequence[float], r: float) -> Dict[str, float]:
        """由对数收益均值反推风险价格

        mu_i = 平均对数收益 + sigma_i^2 / 2，
        lambda1 = (mu1 - r) / sigma1^2，
        lambda_g = (mu2 - r - lambda1 sigma1 sigma2 rho12) / (sigma2^2 sqrt(1 - rho12^2))，lambda_b 同理。
        """
        m1, m2, m3 = (float(v) for v in moments)
        s1, s2, s3 = (float(v) for v in sigmas)
        rho12, rho13 = (float(v) for v in rhos)
        if min(s1, s2, s3) <= 0:
            raise DomainError(f"波动率必须为正: {(s1, s2, s3)}")
        if abs(rho12) >= 1 or abs(rho13) >= 1:
            raise DomainError(f"相关系数必须位于 (-1, 1): {(rho12, rho13)}")

        mu1, mu2, mu3 = m1 + 0.5 * s1 ** 2, m2 + 0.5 * s2 ** 2, m3 + 0.5 * s3 ** 2
        lambda1 = (mu1 - r) / s1 ** 2
        lambda_g = (mu2 - r - lambda1 * s1 * s2 * rho12) / (s2 ** 2 * math.sqrt(1.0 - rho12 ** 2))
        lambda_b = (mu3 - r - lambda1 * s1 * s3 * rho13) / (s3 ** 2 * math.sqrt(1.0 - rho13 ** 2))
        return {"lambda1": lambda1, "lambdaG": lambda_g, "lambdaB": lambda_b}

    def drifts_from_params(self, params: ModelParams) -> Tuple[float, float, float]:
        """模型参数对应的三只资产算术漂移 (mu1, mu2, mu3)"""
        mu = self.market.stock_drifts(params)
        return float(mu[0]), float(mu[1]), float(mu[2])

    def estimate(self, panel: PricePanel) -> EstimatedParams:
        """完整估计流程：波动率、相关系数、无风险利率与风险价格"""
        stats = self.estimate_sigmas_rhos(panel)
        sigmas, rhos, n = stats["sigmas"], stats["rhos"], stats["n"]
        lambdas = self.backout_lambdas(stats["moments"], sigmas, rhos, stats["r"])

        params = ModelParams(
            r=stats["r"],
            lambda1=lambdas["lambda1"],
            lambda_g=lambdas["lambdaG"],
            lambda_b=lambdas["lambdaB"],
            sigma1=float(sigmas[0]),
            sigma2=float(sigmas[1]),
            sigma3=float(sigmas[2]),
            rho12=rhos[0],
            rho13=rhos[1],
        ).validate()

        standard_errors = dict(stats["standard_errors"])
        root_n = math.sqrt(n)
        standard_errors["lambda1"] = 1.0 / (params.sigma1 * root_n)
        standard_errors["lambdaG"] = 1.0 / (params.sigma2 * root_n)
        standard_errors["lambdaB"] = 1.0 / (params.sigma3 * root_n)
        standard_errors["r"] = float(panel.rf.std(ddof=1)) / root_n if len(panel.rf) > 1 else 0.0

        implied = rhos[0] * rhos[1]
        deviation = stats["corr_green_brown"] - implied
        if abs(deviation) > self.corr_warn:
            logger.warning(
                f"[estimation] 绿-棕收益相关系数 {stats['corr_green_brown']:.4f} 与单因子隐含值 "
                f"{implied:.4f} 相差 {deviation:+.4f}，单因子假设可能不成立"
            )
        diagnostics = {
            "corrGreenBrown": stats["corr_green_brown"],
            "corrImplied": implied,
            "corrDeviation": deviation,
        }
        logger.info(f"[estimation] 已由 {n} 个月度收益估计参数")
        return EstimatedParams(params=params, standard_errors=standard_errors,
                               n_observations=n, diagnostics=diagnostics)

    # ===== 模拟数据 =====

    def panel_from_simulation(self, params: ModelParams, n_months: int, seed) -> PricePanel:
        """按模型模拟月度价格，无风险利率取常数 r"""
        prices = self.market.simulate_prices(params, int(n_months), seed)
        dates = pd.RangeIndex(len(prices), name="step")
        return PricePanel(
            dates=dates,
            index=pd.Series(prices["S1"].to_numpy(), index=dates),
            green=pd.Series(prices["S2"].to_numpy(), index=dates),
            brown=pd.Series(prices["S3"].to_numpy(), index=dates),
            rf=pd.Series(np.full(len(prices), params.r), index=dates),
        )

    def convergence_study(self, params: ModelParams, sizes: Sequence[int], n_reps: int, seed: int) -> pd.DataFrame:
        """不同样本长度下 sigma1 与 lambda1 相对误差的均方根

        第 i 个样本长度的第 k 次重复使用种子 [seed, i, k]。
        """
        if n_reps < 1:
            raise DomainError(f"重复次数至少为1，当前为 {n_reps}")
        rows = []
        for i, size in enumerate(sizes):
            rel_sigma, rel_lambda = [], []
            for rep in range(n_reps):
                panel = self.panel_from_simulation(params, size, [int(seed), i, rep])
                stats = self.estimate_sigmas_rhos(panel)
                lambdas = self.backout_lambdas(stats["moments"], stats["sigmas"], stats["rhos"], stats["r"])
                rel_sigma.append(stats["sigmas"][0] / params.sigma1 - 1.0)
                rel_lambda.append(lambdas["lambda1"] / params.lambda1 - 1.0)
            rows.append([int(size),
                         float(np.sqrt(np.mean(np.square(rel_sigma)))),
                         float(np.sqrt(np.mean(np.square(rel_lambda))))])
        frame = pd.DataFrame(rows, columns=["n", "rmseSigma1", "rmseLambda1"])
        if len(frame) > 1:
            frame.attrs["slopes"] = {
                "sigma1": self.log_log_slope(frame, "rmseSigma1"),
                "lambda1": self.log_log_slope(frame, "rmseLambda1"),
            }
            logger.info(f"[estimation] 收敛斜率: {frame.attrs['slopes']}")
        return frame

    @staticmethod
    def log_log_slope(frame: pd.DataFrame, column: str) -> float:
        """log(误差) 对 log(n) 的最小二乘斜率"""
        slope, _ = np.polyfit(np.log(frame["n"].to_numpy(dtype=float)), np.log(frame[column].to_numpy()), 1)
        return float(slope)
