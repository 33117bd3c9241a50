# handlers/wel_handler.py
"""GWEL 处理器"""
from typing import Tuple

from ..config_manager import ConfigManager
from ..core.wel import WelManager
from ..data import DataManager
from ..models import ModelParams
from .utils import emit, load_scores, params_required, parse_grid

__all__ = ["WelHandler"]


class WelHandler:
    """GWEL 处理器"""

    def __init__(self, wel: WelManager, data: DataManager, config_manager: ConfigManager, settings: dict = None):
        self.wel = wel
        self.data = data
        self.config_manager = config_manager
        self.settings = settings or {}

    @params_required
    def handle_wel(self, params: ModelParams, args) -> Tuple[bool, str]:
        """Merton 策略的 kappa 扫描，或 --no-green 时不投资绿色股票的 alpha_g 扫描"""
        if args.no_green:
            if not args.alpha_g_grid:
                return False, "--no-green 需要 --alpha-g-grid"
            frame = self.wel.no_green_sweep(params, parse_grid(args.alpha_g_grid), args.T)
        else:
            if args.alpha_m is None or not args.kappa_grid:
                return False, "需要 --alpha-m 与 --kappa-grid（或使用 --no-green）"
            scores = load_scores(args.scores, self.config_manager, self.data)
            frame = self.wel.kappa_wel_sweep(params, args.alpha_m, parse_grid(args.kappa_grid), scores, args.T)
        return True, emit(self.data, self.data.frame_to_csv(frame), getattr(args, "out", None))
