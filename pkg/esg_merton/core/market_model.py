# core/market_model.py
"""单因子ESG市场模型：合成资产、财富指数动态与路径模拟"""

import math
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd

from ..data.data_manager import DataManager
from ..errors import DomainError
from ..models import IndexDynamics, ModelParams, PathBundle, SyntheticCoefficients
from ..utils.log import logger

__all__ = ["MarketModel", "SeedLike"]

DEFAULT_BLOCK_SIZE = 4096  # 每个随机数块的路径数
DEFAULT_WORKERS = 1
SEED_RULE = "SeedSequence(seed, spawn_key=(block,))"

SeedLike = Union[int, Sequence[int]]
Weights = Tuple[float, float, float]


def _check_weights(weights) -> Weights:
    values = tuple(float(w) for w in weights)
    if len(values) != 3:
        raise DomainError(f"权重应为 (pi1, pi2, pi3) 三个数，当前为 {len(values)} 个")
    if not all(math.isfinite(w) for w in values):
        raise DomainError(f"权重必须为有限数值: {values}")
    return values


class MarketModel:
    """市场模型管理器

    所有随机数都来自 draw_increments：路径按 BLOCK_SIZE 切块，第 k 块使用
    default_rng(SeedSequence(seed, spawn_key=(k,)))，与线程数无关。
    """

    def __init__(self, config: Optional[dict] = None):
        self.config = config or {}

        sim_config = self.config.get("SIMULATION", {})
        self.block_size = int(sim_config.get("BLOCK_SIZE", DEFAULT_BLOCK_SIZE))
        self.workers = int(sim_config.get("WORKERS", DEFAULT_WORKERS))
        if self.block_size < 2 or self.block_size % 2:
            raise DomainError(f"BLOCK_SIZE 必须为不小于2的偶数，当前为 {self.block_size}")
        if self.workers < 1:
            raise DomainError(f"WORKERS 至少为1，当前为 {self.workers}")

    # ===== 系数 =====

    def derive_synthetics(self, params: ModelParams) -> SyntheticCoefficients:
        """合成资产系数 beta2, beta3, sigma_g, sigma_b"""
        params.validate()
        return SyntheticCoefficients(
            beta2=params.sigma2 / params.sigma1 * params.rho12,
            beta3=params.sigma3 / params.sigma1 * params.rho13,
            sigma_g=params.sigma2 * math.sqrt(1.0 - params.rho12 ** 2),
            sigma_b=params.sigma3 * math.sqrt(1.0 - params.rho13 ** 2),
        )

    @staticmethod
    def loading_matrix(params: ModelParams) -> np.ndarray:
        """股票收益对 (z_m, z_g, z_b) 的载荷矩阵（下三角）"""
        return np.array([
            [params.sigma1, 0.0, 0.0],
            [params.sigma2 * params.rho12, params.sigma2 * math.sqrt(1.0 - params.rho12 ** 2), 0.0],
            [params.sigma3 * params.rho13, 0.0, params.sigma3 * math.sqrt(1.0 - params.rho13 ** 2)],
        ])

    @staticmethod
    def risk_prices(params: ModelParams) -> np.ndarray:
        return np.array([params.lambda1 * params.sigma1,
                         params.lambda_g * params.sigma2,
                         params.lambda_b * params.sigma3])

    def stock_drifts(self, params: ModelParams) -> np.ndarray:
        """三只资产的算术漂移 mu1, mu2, mu3"""
        params.validate()
        return params.r + self.loading_matrix(params) @ self.risk_prices(params)

    def index_dynamics(self, params: ModelParams, weights) -> IndexDynamics:
        """常数权重策略下三个财富指数与总财富的对数漂移和波动率"""
        pi1, pi2, pi3 = _check_weights(weights)
        syn = self.derive_synthetics(params)
        beta_p = pi1 + syn.beta2 * pi2 + syn.beta3 * pi3
        s1 = params.sigma1

        vol_m = beta_p * s1
        vol_g = pi2 * syn.sigma_g
        vol_b = pi3 * syn.sigma_b
        drift_m = params.theta_m * params.r + params.lambda1 * s1 ** 2 * beta_p - 0.5 * vol_m ** 2
        drift_g = params.theta_g * params.r + pi2 * params.lambda_g * params.sigma2 * syn.sigma_g - 0.5 * vol_g ** 2
        drift_b = params.theta_b * params.r + pi3 * params.lambda_b * params.sigma3 * syn.sigma_b - 0.5 * vol_b ** 2

        # 总财富直接由股票层面的财富方程得到，不经过指数分解
        pi = np.array([pi1, pi2, pi3])
        wealth_vols = pi @ self.loading_matrix(params)
        excess = self.stock_drifts(params) - params.r
        wealth_drift = params.r + float(pi @ excess) - 0.5 * float(wealth_vols @ wealth_vols)

        return IndexDynamics(
            drift_m=drift_m, drift_g=drift_g, drift_b=drift_b,
            vol_m=vol_m, vol_g=vol_g, vol_b=vol_b,
            wealth_drift=wealth_drift,
            wealth_vol_m=float(wealth_vols[0]),
            wealth_vol_g=float(wealth_vols[1]),
            wealth_vol_b=float(wealth_vols[2]),
        )

    # ===== 随机数 =====

    def _block_layout(self, n_paths: int) -> List[Tuple[int, int, int]]:
        """(块号, 起始行, 行数) 列表"""
        layout = []
        for k, start in enumerate(range(0, n_paths, self.block_size)):
            layout.append((k, start, min(self.block_size, n_paths - start)))
        return layout

    @staticmethod
    def _block_normals(seed: SeedLike, block: int, rows: int, n_steps: int, antithetic: bool) -> np.ndarray:
        rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(block,)))
        if not antithetic:
            return rng.standard_normal((3, rows, n_steps))
        half = (rows + 1) // 2
        base = rng.standard_normal((3, half, n_steps))
        return np.concatenate([base, -base], axis=1)[:, :rows, :]

    def _map_blocks(self, func, layout):
        if self.workers == 1 or len(layout) == 1:
            return [func(item) for item in layout]
        with ThreadPoolExecutor(max_workers=self.workers) as pool:
            return list(pool.map(func, layout))

    @staticmethod
    def _check_counts(n_steps: int, n_paths: int):
        if int(n_steps) < 1:
            raise DomainError(f"n_steps 至少为1，当前为 {n_steps}")
        if int(n_paths) < 1:
            raise DomainError(f"n_paths 至少为1，当前为 {n_paths}")

    def draw_increments(self, n_steps: int, n_paths: int, seed: SeedLike, antithetic: bool = False) -> np.ndarray:
        """标准正态增量，形状 (3, n_paths, n_steps)，三条流依次为 z_m, z_g, z_b"""
        self._check_counts(n_steps, n_paths)
        layout = self._block_layout(n_paths)
        out = np.empty((3, n_paths, n_steps))

        def fill(item):
            k, start, rows = item
            out[:, start:start + rows, :] = self._block_normals(seed, k, rows, n_steps, antithetic)

        self._map_blocks(fill, layout)
        return out

    def summed_increments(self, n_steps: int, n_paths: int, seed: SeedLike, antithetic: bool = False) -> np.ndarray:
        """与 draw_increments 同一随机流，只保留每条路径的步内求和，形状 (3, n_paths)"""
        self._check_counts(n_steps, n_paths)
        layout = self._block_layout(n_paths)
        out = np.empty((3, n_paths))

        def fill(item):
            k, start, rows = item
            out[:, start:start + rows] = self._block_normals(seed, k, rows, n_steps, antithetic).sum(axis=2)

        self._map_blocks(fill, layout)
        return out

    # ===== 模拟 =====

    def terminal_log_indexes(self, params: ModelParams, weights, horizon_t: float,
                             z_sums: np.ndarray, n_steps: int = 1) -> np.ndarray:
        """由步内求和的增量精确得到 log(X_T / X_0)，形状 (3, n_paths)"""
        if horizon_t <= 0:
            raise DomainError(f"投资期限必须为正，当前为 {horizon_t}")
        dyn = self.index_dynamics(params, weights)
        sqrt_dt = math.sqrt(horizon_t / n_steps)
        z_sums = np.asarray(z_sums, dtype=float)
        return dyn.drifts[:, None] * horizon_t + dyn.vols[:, None] * sqrt_dt * z_sums

    def simulate_paths(self, params: ModelParams, weights, horizon_t: float, n_steps: int,
                       n_paths: int, seed: SeedLike, w0: float = 1.0) -> PathBundle:
        """常数权重策略下的精确对数正态路径"""
        weights = _check_weights(weights)
        if not math.isfinite(horizon_t) or horizon_t <= 0:
            raise DomainError(f"投资期限必须为正，当前为 {horizon_t}")
        if not w0 > 0:
            raise DomainError(f"初始财富必须为正，当前为 {w0}")
        self._check_counts(n_steps, n_paths)

        dyn = self.index_dynamics(params, weights)
        dt = horizon_t / n_steps
        sqrt_dt = math.sqrt(dt)
        z = self.draw_increments(n_steps, n_paths, seed)

        def cumulate(steps: np.ndarray, start: float = 0.0) -> np.ndarray:
            path = np.empty((n_paths, n_steps + 1))
            path[:, 0] = start
            path[:, 1:] = start + np.cumsum(steps, axis=1)
            return path

        log_xm = cumulate(dyn.drift_m * dt + dyn.vol_m * sqrt_dt * z[0])
        log_xg = cumulate(dyn.drift_g * dt + dyn.vol_g * sqrt_dt * z[1])
        log_xb = cumulate(dyn.drift_b * dt + dyn.vol_b * sqrt_dt * z[2])
        wealth_steps = dyn.wealth_drift * dt + sqrt_dt * (
            dyn.wealth_vol_m * z[0] + dyn.wealth_vol_g * z[1] + dyn.wealth_vol_b * z[2]
        )
        log_w = cumulate(wealth_steps, start=math.log(w0))

        logger.info(f"[market] 已模拟 {n_paths} 条路径 x {n_steps} 步 (T={horizon_t})")
        return PathBundle(
            times=np.linspace(0.0, horizon_t, n_steps + 1),
            log_xm=log_xm, log_xg=log_xg, log_xb=log_xb, log_w=log_w,
            z_m=z[0], z_g=z[1], z_b=z[2],
            w0=w0,
            seed={"seed": seed, "block_size": self.block_size, "rule": SEED_RULE},
        )

    @staticmethod
    def wealth_from_indexes(x_m, x_g, x_b, w0: float = 1.0):
        """W = w0 * X_m * X_g * X_b（各指数为相对初值的比例）"""
        arrays = [np.asarray(x, dtype=float) for x in (x_m, x_g, x_b)]
        if any(np.any(~(a > 0)) for a in arrays) or not w0 > 0:
            raise DomainError("财富指数比例与初始财富必须为正")
        result = w0 * arrays[0] * arrays[1] * arrays[2]
        return float(result) if result.ndim == 0 else result

    def simulate_prices(self, params: ModelParams, n_steps: int, seed: SeedLike,
                        s0=(1.0, 1.0, 1.0), dt: float = 1.0) -> pd.DataFrame:
        """按几何布朗运动精确模拟指数、绿色股票和棕色股票的价格

        Returns:
            列为 step, S1, S2, S3 的 DataFrame（共 n_steps + 1 行）
        """
        s0 = np.asarray(s0, dtype=float)
        if s0.shape != (3,) or np.any(~(s0 > 0)):
            raise DomainError(f"初始价格必须为三个正数: {s0}")
        if not dt > 0:
            raise DomainError(f"时间步长必须为正，当前为 {dt}")

        z = self.draw_increments(n_steps, 1, seed)[:, 0, :]  # (3, n_steps)
        loading = self.loading_matrix(params)
        vols = np.sqrt((loading ** 2).sum(axis=1))
        log_drift = self.stock_drifts(params) - 0.5 * vols ** 2
        increments = log_drift[:, None] * dt + math.sqrt(dt) * (loading @ z)

        log_s = np.empty((3, n_steps + 1))
        log_s[:, 0] = np.log(s0)
        log_s[:, 1:] = log_s[:, [0]] + np.cumsum(increments, axis=1)
        prices = np.exp(log_s)
        return pd.DataFrame({
            "step": np.arange(n_steps + 1),
            "S1": prices[0],
            "S2": prices[1],
            "S3": prices[2],
        })

    def synthetic_log_increments(self, params: ModelParams, log_s_increments,
                                 dt: float = 1.0) -> Tuple[np.ndarray, np.ndarray]:
        """由三只资产的对数收益得到绿色、棕色合成资产的对数收益

        Args:
            log_s_increments: 形状 (n, 3) 的对数收益（指数、绿色、棕色）
        """
        inc = np.asarray(log_s_increments, dtype=float)
        if inc.ndim != 2 or inc.shape[1] != 3:
            raise DomainError(f"对数收益应为 (n, 3) 数组，当前形状为 {inc.shape}")
        syn = self.derive_synthetics(params)
        s1_sq = params.sigma1 ** 2
        r = params.r

        # 对数收益与算术收益之间的伊藤修正项 1/2 * beta * (beta - 1) * sigma1^2
        d_green = inc[:, 1] - syn.beta2 * inc[:, 0] - (1.0 - syn.beta2) * r * dt \
            + 0.5 * syn.beta2 * (syn.beta2 - 1.0) * s1_sq * dt
        d_brown = inc[:, 2] - syn.beta3 * inc[:, 0] - (1.0 - syn.beta3) * r * dt \
            + 0.5 * syn.beta3 * (syn.beta3 - 1.0) * s1_sq * dt
        return d_green, d_brown

    def export_paths_csv(self, bundle: PathBundle, path: Union[str, Path],
                         data_manager: Optional[DataManager] = None) -> str:
        """导出 path,step,logXm,logXg,logXb,logW 长表"""
        data_manager = data_manager or DataManager()
        return data_manager.write_csv(bundle.to_frame(), path)
