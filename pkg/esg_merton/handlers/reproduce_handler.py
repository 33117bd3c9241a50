# handlers/reproduce_handler.py
"""按图表配方生成实证研究各图的数据"""
from typing import Optional, Tuple

import pandas as pd

from ..config_manager import ConfigManager
from ..core.wel import WelManager
from ..data import DataManager
from ..errors import DomainError
from ..models import ModelParams
from ..utils.log import logger
from .allocation_handler import AllocationHandler
from .utils import emit, load_params, parse_grid

__all__ = ["ReproduceHandler"]

DEFAULT_WEL_HORIZON = 12.0


class ReproduceHandler:
    """图表数据处理器，配方见 config/figures.json"""

    def __init__(self, allocation_handler: AllocationHandler, wel: WelManager, data: DataManager,
                 config_manager: ConfigManager, settings: dict = None):
        self.allocation_handler = allocation_handler
        self.allocation = allocation_handler.allocation
        self.wel = wel
        self.data = data
        self.config_manager = config_manager
        self.settings = settings or {}

    def _series_params(self, series: dict, override: Optional[ModelParams]) -> ModelParams:
        return override or self.config_manager.get_pair_params(series["pair"])

    def figure_frame(self, number: int, override: Optional[ModelParams] = None) -> pd.DataFrame:
        """生成图 number 的数据表，每行带 pair（及 alphaM）列标明所属曲线"""
        recipe = self.config_manager.get_figure(number)
        kind = recipe.get("kind")
        frames = []
        for series in recipe.get("series", []):
            pair = series["pair"]
            params = self._series_params(series, override)

            if kind == "sweep":
                scores = self.config_manager.get_pair_scores(pair) if recipe["vary"] == "kappa" else None
                frame = self.allocation_handler.sweep_frame(
                    params, recipe["vary"], parse_grid(recipe["grid"]), series["alpha_m"],
                    alpha_g=series.get("alpha_g"), alpha_b=series.get("alpha_b"), scores=scores)
            elif kind == "tradeoff":
                grid = parse_grid(f"{recipe['alpha_b_low']}:{series['alpha_m']}:{recipe['step']}")
                points = self.allocation.tradeoff_curve(params, series["alpha_m"], grid)
                frame = self.allocation.tradeoff_frame(points)
                frame.insert(0, "alphaM", series["alpha_m"])
            elif kind == "indifference":
                frame = self.allocation_handler.indifference_frame(
                    recipe["kappas"], recipe["level"], series["alpha_m"],
                    self.config_manager.get_pair_scores(pair),
                    xm=recipe.get("xm", 1.0), xg_grid=parse_grid(recipe["grid"]))
                frame.insert(0, "alphaM", series["alpha_m"])
            elif kind == "wel_kappa":
                frame = self.wel.kappa_wel_sweep(
                    params, series["alpha_m"], parse_grid(recipe["grid"]),
                    self.config_manager.get_pair_scores(pair), recipe.get("T", DEFAULT_WEL_HORIZON))
                frame.insert(0, "alphaM", series["alpha_m"])
            elif kind == "wel_no_green":
                frame = self.wel.no_green_sweep(params, parse_grid(recipe["grid"]),
                                                recipe.get("T", DEFAULT_WEL_HORIZON))
            else:
                raise DomainError(f"图 {number} 的配方类型 {kind!r} 无法识别")

            frame.insert(0, "pair", pair)
            frames.append(frame)

        if not frames:
            raise DomainError(f"图 {number} 的配方没有任何曲线")
        logger.info(f"[reproduce] 图 {number}（{recipe.get('title', '')}）共 {len(frames)} 条曲线")
        return pd.concat(frames, ignore_index=True)

    def handle_reproduce(self, args) -> Tuple[bool, str]:
        override = load_params(args.params, self.config_manager, self.data) if args.params else None
        frame = self.figure_frame(args.figure, override)
        return True, emit(self.data, self.data.frame_to_csv(frame), getattr(args, "out", None))
