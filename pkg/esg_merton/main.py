import argparse
import sys
from typing import Callable, Dict, List, Optional, Tuple

from .config_manager import ConfigManager
from .core import AllocationManager, MarketModel, PreferenceManager, WelManager
from .data import DataManager
from .errors import EsgMertonError
from .handlers import AllocationHandler, EstimationHandler, ReproduceHandler, VerifyHandler, WelHandler
from .handlers.utils import (
    CMD_ALLOCATE, CMD_DOMINANCE, CMD_ESTIMATE, CMD_INDIFFERENCE, CMD_REPRODUCE,
    CMD_SCORES, CMD_SWEEP, CMD_TRADEOFF, CMD_VERIFY, CMD_WEL,
)
from .managers import EstimationManager, MonteCarloOracle
from .utils.log import logger, setup_logging

EXIT_OK = 0
EXIT_FAILED = 1  # 业务错误或校验未通过
EXIT_IO = 2  # 文件缺失、不可读或不可写


class CommandParser(argparse.ArgumentParser):
    """参数错误以 EXIT_FAILED 退出"""

    def error(self, message: str):
        self.print_usage(sys.stderr)
        self.exit(EXIT_FAILED, f"{self.prog}: 错误: {message}\n")


class EsgMertonApp:
    """ESG Merton 组合工具 - 装配各管理器与处理器"""

    def __init__(self, settings: Optional[dict] = None, config_manager: Optional[ConfigManager] = None):
        self.config_manager = config_manager or ConfigManager()
        self.settings = settings if settings is not None else self.config_manager.default_settings()

        output_config = self.settings.get("OUTPUT", {})
        self.data = DataManager(json_indent=int(output_config.get("JSON_INDENT", 2)))

        # 初始化核心管理器
        self.market = MarketModel(self.settings)
        self.preferences = PreferenceManager(self.settings)
        self.allocation = AllocationManager(self.settings, market=self.market, preferences=self.preferences)
        self.wel = WelManager(self.settings, allocation=self.allocation)
        self.oracle = MonteCarloOracle(self.settings, market=self.market, allocation=self.allocation, wel=self.wel)
        self.estimation = EstimationManager(self.settings, market=self.market, preferences=self.preferences,
                                            data_manager=self.data)

        # 初始化处理器
        self.estimation_handler = EstimationHandler(self.estimation, self.data, self.config_manager, self.settings)
        self.allocation_handler = AllocationHandler(self.allocation, self.data, self.config_manager, self.settings)
        self.wel_handler = WelHandler(self.wel, self.data, self.config_manager, self.settings)
        self.verify_handler = VerifyHandler(self.oracle, self.data, self.config_manager, self.settings)
        self.reproduce_handler = ReproduceHandler(self.allocation_handler, self.wel, self.data,
                                                  self.config_manager, self.settings)

        logger.info("[main] 管理器与处理器初始化完成")

    def commands(self) -> Dict[str, Callable[[argparse.Namespace], Tuple[bool, str]]]:
        return {
            CMD_ESTIMATE: self.estimation_handler.handle_estimate,
            CMD_SCORES: self.estimation_handler.handle_scores,
            CMD_ALLOCATE: self.allocation_handler.handle_allocate,
            CMD_TRADEOFF: self.allocation_handler.handle_tradeoff,
            CMD_DOMINANCE: self.allocation_handler.handle_dominance,
            CMD_WEL: self.wel_handler.handle_wel,
            CMD_SWEEP: self.allocation_handler.handle_sweep,
            CMD_INDIFFERENCE: self.allocation_handler.handle_indifference,
            CMD_VERIFY: self.verify_handler.handle_verify,
            CMD_REPRODUCE: self.reproduce_handler.handle_reproduce,
        }

    def run(self, args: argparse.Namespace) -> Tuple[bool, str]:
        return self.commands()[args.command](args)


def build_parser() -> argparse.ArgumentParser:
    parser = CommandParser(
        prog="esg_merton",
        description="单因子ESG市场模型下的多元CRRA最优配置、绿-棕权衡与GWEL分析",
    )
    parser.add_argument("--config", help="覆盖默认设置的JSON文件")
    parser.add_argument("--log-level", default="WARNING", help="日志级别（默认 WARNING）")
    sub = parser.add_subparsers(dest="command", required=True)

    def command(name: str, help_text: str, out: bool = True) -> argparse.ArgumentParser:
        p = sub.add_parser(name, help=help_text)
        if out:
            p.add_argument("--out", help="输出文件，缺省输出到 stdout")
        return p

    p = command(CMD_ESTIMATE, "由价格与利率文件估计模型参数")
    p.add_argument("--prices", required=True, help="长格式价格文件 date,ticker,adj_close")
    p.add_argument("--rates", required=True, help="无风险利率文件 date,yield_annualized")
    p.add_argument("--index", required=True, help="市场指数代码")
    p.add_argument("--green", required=True, help="绿色股票代码")
    p.add_argument("--brown", required=True, help="棕色股票代码")

    p = command(CMD_SCORES, "由评级文件计算ESG评分")
    p.add_argument("--ratings", required=True, help="评级文件 date,company,rating")
    p.add_argument("--green", required=True)
    p.add_argument("--brown", required=True)
    p.add_argument("--market", help="代表市场的评级名称，缺省取各公司平均分的均值")
    p.add_argument("--top", type=int, help="排名输出的公司数")

    p = command(CMD_ALLOCATE, "最优权重")
    p.add_argument("--params", required=True, help="参数文件或 fixture:<pair>")
    p.add_argument("--alpha-m", type=float, required=True)
    p.add_argument("--alpha-g", type=float)
    p.add_argument("--alpha-b", type=float)
    p.add_argument("--kappa", type=float)
    p.add_argument("--scores", help="评分文件或 fixture:<pair>")

    p = command(CMD_TRADEOFF, "绿-棕风险厌恶权衡曲线")
    p.add_argument("--params", required=True)
    p.add_argument("--alpha-m", type=float, required=True)
    p.add_argument("--alpha-b-grid", required=True, help="LO:HI:STEP")

    p = command(CMD_DOMINANCE, "绿色权重是否超过棕色权重")
    p.add_argument("--params", required=True)
    p.add_argument("--alpha-m", type=float)
    p.add_argument("--alpha-g", type=float)
    p.add_argument("--alpha-b", type=float)

    p = command(CMD_WEL, "绿色指数财富等价损失")
    p.add_argument("--params", required=True)
    p.add_argument("--alpha-m", type=float)
    p.add_argument("--kappa-grid")
    p.add_argument("--scores")
    p.add_argument("--no-green", action="store_true", help="不投资绿色股票的 GWEL")
    p.add_argument("--alpha-g-grid")
    p.add_argument("-T", type=float, default=12.0, help="投资期限（月）")

    p = command(CMD_SWEEP, "沿一个参数扫描最优配置")
    p.add_argument("--vary", required=True, choices=["alpha-g", "alpha-b", "kappa"])
    p.add_argument("--grid", required=True, help="LO:HI:STEP")
    p.add_argument("--params", required=True)
    p.add_argument("--alpha-m", type=float, required=True)
    p.add_argument("--alpha-g", type=float)
    p.add_argument("--alpha-b", type=float)
    p.add_argument("--scores")

    p = command(CMD_INDIFFERENCE, "X_g-X_b 无差异曲线")
    p.add_argument("--kappa-list", required=True, help="K1,K2,...")
    p.add_argument("--level", type=float, required=True, help="效用水平（负数）")
    p.add_argument("--alpha-m", type=float, required=True)
    p.add_argument("--scores", required=True)
    p.add_argument("--xm", type=float, default=1.0)
    p.add_argument("--xg-grid")

    p = command(CMD_VERIFY, "闭式解与蒙特卡洛估计对比")
    p.add_argument("--params", required=True)
    p.add_argument("--profile", required=True, help="am,ag,ab")
    p.add_argument("--weights", help="w1,w2,w3，缺省为最优权重")
    p.add_argument("-T", type=float, help="投资期限（月）")
    p.add_argument("--paths", type=int, help="路径数")
    p.add_argument("--seed", type=int, help="随机种子")

    p = command(CMD_REPRODUCE, "生成实证研究中图 N 的数据")
    p.add_argument("--figure", type=int, required=True, help="图号 1-11")
    p.add_argument("--params", help="替换配方中股票对参数的参数文件")

    return parser


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return e.code if isinstance(e.code, int) else EXIT_FAILED
    setup_logging(args.log_level)

    try:
        config_manager = ConfigManager()
        settings = config_manager.load_settings(args.config)
        app = EsgMertonApp(settings, config_manager)
        ok, text = app.run(args)
    except OSError as e:
        print(f"文件错误: {e}", file=sys.stderr)
        return EXIT_IO
    except (EsgMertonError, ValueError) as e:
        print(f"错误: {e}", file=sys.stderr)
        return EXIT_FAILED

    # verify 未通过时报告仍输出到 stdout
    stream = sys.stdout if ok or args.command == CMD_VERIFY else sys.stderr
    if text:
        stream.write(text)
    return EXIT_OK if ok else EXIT_FAILED
