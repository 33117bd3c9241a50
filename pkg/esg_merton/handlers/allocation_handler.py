# handlers/allocation_handler.py
"""最优配置、权衡曲线、绿色占优、参数扫描与无差异曲线处理器"""
from typing import List, Optional, Tuple

import numpy as np
import pandas as pd

from ..config_manager import ConfigManager
from ..core.allocation import AllocationManager
from ..data import DataManager
from ..errors import DomainError
from ..models import EsgScoreTable, ModelParams, RiskAversionProfile
from ..utils.log import logger
from .utils import emit, load_scores, params_required, parse_float_list, parse_grid

__all__ = ["AllocationHandler", "INDIFFERENCE_COLUMNS"]

INDIFFERENCE_COLUMNS = ["kappa", "xg", "xb", "p1", "p2", "C"]
DEFAULT_INDIFFERENCE_POINTS = 50
DEFAULT_XG_RANGE = (0.5, 2.0)
SWEEP_TARGETS = ("alpha-g", "alpha-b", "kappa")


class AllocationHandler:
    """配置处理器"""

    def __init__(self, allocation: AllocationManager, data: DataManager, config_manager: ConfigManager,
                 settings: dict = None):
        self.allocation = allocation
        self.preferences = allocation.preferences
        self.data = data
        self.config_manager = config_manager
        self.settings = settings or {}
        output_config = self.settings.get("OUTPUT", {})
        self.indifference_points = int(output_config.get("INDIFFERENCE_POINTS", DEFAULT_INDIFFERENCE_POINTS))

    def _profile_from_args(self, args) -> Tuple[bool, str, Optional[RiskAversionProfile]]:
        """由 --alpha-g/--alpha-b 或 --kappa/--scores 构建偏好"""
        kappa = getattr(args, "kappa", None)
        if kappa is not None:
            if args.alpha_g is not None or args.alpha_b is not None:
                return False, "--kappa 不能与 --alpha-g/--alpha-b 同时使用", None
            scores = load_scores(args.scores, self.config_manager, self.data)
            return True, "", self.preferences.kappa_map(args.alpha_m, kappa, scores)
        alpha_g = args.alpha_m if args.alpha_g is None else args.alpha_g
        alpha_b = args.alpha_m if args.alpha_b is None else args.alpha_b
        return True, "", RiskAversionProfile(args.alpha_m, alpha_g, alpha_b)

    @params_required
    def handle_allocate(self, params: ModelParams, args) -> Tuple[bool, str]:
        """最优权重与值函数系数"""
        ok, msg, profile = self._profile_from_args(args)
        if not ok:
            return False, msg
        weights = self.allocation.optimal_weights(params, profile)
        data = {
            "alphaM": profile.alpha_m,
            "alphaG": profile.alpha_g,
            "alphaB": profile.alpha_b,
            **weights.to_dict(),
            "b": self.allocation.value_coefficient(params, profile),
            "bM": self.allocation.merton_coefficient(params, profile.alpha_m),
        }
        return True, emit(self.data, self.data.to_json_text(data), getattr(args, "out", None))

    @params_required
    def handle_tradeoff(self, params: ModelParams, args) -> Tuple[bool, str]:
        """给定 alpha_m 的绿-棕权衡曲线"""
        grid = parse_grid(args.alpha_b_grid)
        points = self.allocation.tradeoff_curve(params, args.alpha_m, grid)
        frame = self.allocation.tradeoff_frame(points)
        return True, emit(self.data, self.data.frame_to_csv(frame), getattr(args, "out", None))

    @params_required
    def handle_dominance(self, params: ModelParams, args) -> Tuple[bool, str]:
        """绿色权重是否超过棕色权重"""
        given = [args.alpha_m, args.alpha_g, args.alpha_b]
        if any(v is not None for v in given) and not all(v is not None for v in given):
            return False, "--alpha-m、--alpha-g、--alpha-b 需同时给出"
        profile = RiskAversionProfile(*given) if given[0] is not None else None
        result = self.allocation.green_dominance(params, profile)
        data = result.to_dict()
        data["alphaB"] = profile.alpha_b if profile else self.allocation.dominance_alpha_b
        return True, emit(self.data, self.data.to_json_text(data), getattr(args, "out", None))

    # ===== 扫描 =====

    def sweep_frame(self, params: ModelParams, vary: str, grid, alpha_m: float,
                    alpha_g: Optional[float] = None, alpha_b: Optional[float] = None,
                    scores: Optional[EsgScoreTable] = None) -> pd.DataFrame:
        """沿一个参数扫描最优配置，label 列为扫描值"""
        grid = [float(v) for v in grid]
        if vary == "alpha-g":
            fixed_b = alpha_m if alpha_b is None else alpha_b
            profiles = [RiskAversionProfile(alpha_m, v, fixed_b) for v in grid]
        elif vary == "alpha-b":
            fixed_g = alpha_m if alpha_g is None else alpha_g
            profiles = [RiskAversionProfile(alpha_m, fixed_g, v) for v in grid]
        elif vary == "kappa":
            if scores is None:
                raise DomainError("按 kappa 扫描时必须提供 --scores")
            profiles = [self.preferences.kappa_map(alpha_m, v, scores) for v in grid]
        else:
            raise DomainError(f"未知扫描参数 {vary}，应为 {'/'.join(SWEEP_TARGETS)}")
        return self.allocation.allocation_sweep(params, profiles, grid)

    @params_required
    def handle_sweep(self, params: ModelParams, args) -> Tuple[bool, str]:
        if args.vary not in SWEEP_TARGETS:
            return False, f"--vary 应为 {'/'.join(SWEEP_TARGETS)}"
        scores = load_scores(args.scores, self.config_manager, self.data) if args.vary == "kappa" else None
        frame = self.sweep_frame(params, args.vary, parse_grid(args.grid), args.alpha_m,
                                 alpha_g=args.alpha_g, alpha_b=args.alpha_b, scores=scores)
        return True, emit(self.data, self.data.frame_to_csv(frame), getattr(args, "out", None))

    # ===== 无差异曲线 =====

    def indifference_frame(self, kappas, level: float, alpha_m: float, scores: EsgScoreTable,
                           xm: float = 1.0, xg_grid=None) -> pd.DataFrame:
        """各 kappa 下的 X_g-X_b 无差异曲线取样"""
        if xg_grid is None:
            xg_grid = np.linspace(*DEFAULT_XG_RANGE, self.indifference_points)
        xg = np.asarray(xg_grid, dtype=float)
        base = RiskAversionProfile.uniform(alpha_m)
        frames: List[pd.DataFrame] = []
        for kappa in kappas:
            curve = self.preferences.indifference_curve_level(base, level, xm=xm, kappa=float(kappa), scores=scores)
            frames.append(pd.DataFrame({
                "kappa": float(kappa),
                "xg": xg,
                "xb": curve.xb_for(xg),
                "p1": curve.p1,
                "p2": curve.p2,
                "C": curve.constant,
            }, columns=INDIFFERENCE_COLUMNS))
        logger.info(f"[allocation] 已生成 {len(frames)} 条无差异曲线")
        return pd.concat(frames, ignore_index=True)

    def handle_indifference(self, args) -> Tuple[bool, str]:
        kappas = parse_float_list(args.kappa_list, name="--kappa-list")
        scores = load_scores(args.scores, self.config_manager, self.data)
        xg_grid = parse_grid(args.xg_grid) if args.xg_grid else None
        frame = self.indifference_frame(kappas, args.level, args.alpha_m, scores, xm=args.xm, xg_grid=xg_grid)
        return True, emit(self.data, self.data.frame_to_csv(frame), getattr(args, "out", None))
