# handlers/verify_handler.py
"""蒙特卡洛校验处理器"""
from typing import Tuple

from ..config_manager import ConfigManager
from ..data import DataManager
from ..managers.mc_oracle import MonteCarloOracle
from ..models import ModelParams
from .utils import emit, params_required, parse_float_list, parse_profile

__all__ = ["VerifyHandler"]


class VerifyHandler:
    """校验处理器"""

    def __init__(self, oracle: MonteCarloOracle, data: DataManager, config_manager: ConfigManager,
                 settings: dict = None):
        self.oracle = oracle
        self.data = data
        self.config_manager = config_manager
        self.settings = settings or {}

    @params_required
    def handle_verify(self, params: ModelParams, args) -> Tuple[bool, str]:
        """闭式期望效用对蒙特卡洛估计；未通过时返回 False，报告照常输出"""
        profile = parse_profile(args.profile)
        weights = parse_float_list(args.weights, expected=3, name="--weights") if args.weights else None
        report = self.oracle.verify(params, profile, weights=weights, horizon_t=args.T,
                                    n_paths=args.paths, seed=args.seed)
        text = self.data.to_json_text(report.to_dict())
        return report.passed, emit(self.data, text, getattr(args, "out", None))
