# handlers/estimation_handler.py
"""参数估计与ESG评分处理器"""
from typing import Tuple

from ..config_manager import ConfigManager
from ..data import DataManager
from ..managers.estimation import EstimationManager
from .utils import emit

__all__ = ["EstimationHandler"]


class EstimationHandler:
    """参数估计处理器"""

    def __init__(self, estimation: EstimationManager, data: DataManager, config_manager: ConfigManager,
                 settings: dict = None):
        self.estimation = estimation
        self.data = data
        self.config_manager = config_manager
        self.settings = settings or {}

    def handle_estimate(self, args) -> Tuple[bool, str]:
        """由价格与利率文件估计模型参数"""
        panel = self.estimation.load_panel(args.prices, args.rates, args.index, args.green, args.brown)
        result = self.estimation.estimate(panel)
        text = self.data.write_params(result)
        if not args.out:
            return True, text

        self.data.write_text(text, args.out)
        p = result.params
        se = result.standard_errors
        lines = [
            f"估计完成：{result.n_observations} 个月度收益（{', '.join(panel.tickers)}）",
            f"  r        = {p.r:.6g}",
            f"  lambda1  = {p.lambda1:.6g}  (se {se['lambda1']:.3g})",
            f"  lambdaG  = {p.lambda_g:.6g}  (se {se['lambdaG']:.3g})",
            f"  lambdaB  = {p.lambda_b:.6g}  (se {se['lambdaB']:.3g})",
            f"  sigma    = {p.sigma1:.6g}, {p.sigma2:.6g}, {p.sigma3:.6g}",
            f"  rho12    = {p.rho12:.6g}  (se {se['rho12']:.3g})",
            f"  rho13    = {p.rho13:.6g}  (se {se['rho13']:.3g})",
            f"  绿-棕相关系数 {result.diagnostics['corrGreenBrown']:.4f}，"
            f"单因子隐含值 {result.diagnostics['corrImplied']:.4f}",
            f"参数已写入 {args.out}",
        ]
        return True, "\n".join(lines) + "\n"

    def handle_scores(self, args) -> Tuple[bool, str]:
        """由评级文件计算绿色、棕色公司与市场的ESG评分"""
        ratings = self.estimation.load_ratings(args.ratings)
        table, company_scores = self.estimation.score_table(
            ratings, args.green, args.brown,
            letter_map=self.config_manager.letter_map(self.settings),
            market_company=getattr(args, "market", None),
        )
        text = self.data.to_json_text(table.to_dict())

        top, bottom = self.estimation.preferences.rank_companies(company_scores, getattr(args, "top", None))
        lines = [f"市场平均分：{table.e_market:.6f}", "平均分最高："]
        lines.extend(f"  {name}: {score:.6f}" for name, score in top.items())
        lines.append("平均分最低：")
        lines.extend(f"  {name}: {score:.6f}" for name, score in bottom.items())
        ranking = "\n".join(lines) + "\n"

        # 未指定 --out 时 stdout 只输出评分JSON
        if not args.out:
            return True, text
        emit(self.data, text, args.out)
        return True, ranking
