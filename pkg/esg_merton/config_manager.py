import copy
import json
from pathlib import Path
from typing import Any, Dict, Optional

from .data.default_configs import RATING_LETTER_MAP
from .errors import DomainError
from .models import EsgScoreTable, ModelParams
from .utils.log import logger

PACKAGE_DIR = Path(__file__).resolve().parent
FIXTURE_PREFIX = "fixture:"


class ConfigManager:
    """配置管理器，加载运行设置、市场参数、ESG评分和图表配方"""

    def __init__(self, base_dir: Optional[Path] = None):
        self._base_dir = Path(base_dir) if base_dir else PACKAGE_DIR
        self.schema: Dict[str, Any] = {}  # 设置项说明与默认值
        self.market_pairs: Dict[str, dict] = {}  # 股票对参数，key为股票对名称
        self.esg_scores: Dict[str, dict] = {}  # 股票对ESG评分
        self.figures: Dict[str, dict] = {}  # 图表配方，key为图号字符串

        self._load_all()

    def _load_json(self, file_path: Path) -> Dict[str, Any]:
        """加载JSON配置文件（字典格式）

        Args:
            file_path: 配置文件路径

        Returns:
            配置字典；文件缺失或格式错误时返回空字典
        """
        if not file_path.exists():
            logger.warning(f"[config] 配置文件 {file_path} 不存在，将使用空数据。")
            return {}
        try:
            with open(file_path, 'r', encoding='utf-8') as f:
                data = json.load(f)
        except Exception as e:
            logger.error(f"[config] 加载配置文件 {file_path} 失败: {e}")
            return {}

        if not isinstance(data, dict):
            logger.error(f"[config] 配置文件 {file_path.name} 格式不正确，应为对象。")
            return {}
        logger.info(f"[config] 成功加载 {file_path.name} (共 {len(data)} 条数据)。")
        return data

    def _load_all(self):
        """加载所有配置文件"""
        config_dir = self._base_dir / "config"

        self.schema = self._load_json(self._base_dir / "_conf_schema.json")
        self.market_pairs = self._load_json(config_dir / "market_pairs.json")
        self.esg_scores = self._load_json(config_dir / "esg_scores.json")
        self.figures = self._load_json(config_dir / "figures.json")

        logger.info(
            f"[config] 配置管理器初始化完成，"
            f"{len(self.schema)} 组设置，"
            f"{len(self.market_pairs)} 个股票对，"
            f"{len(self.figures)} 个图表配方"
        )

    # ==================== 设置 ====================

    def default_settings(self) -> Dict[str, Dict[str, Any]]:
        """由设置说明提取默认值，得到嵌套字典"""
        settings: Dict[str, Dict[str, Any]] = {}
        for group, group_schema in self.schema.items():
            items = group_schema.get("items", {}) if isinstance(group_schema, dict) else {}
            settings[group] = {key: copy.deepcopy(item.get("default")) for key, item in items.items()}
        return settings

    def load_settings(self, override_path: Optional[str] = None) -> Dict[str, Dict[str, Any]]:
        """构建运行设置：默认值深度合并用户覆盖文件

        Args:
            override_path: 用户JSON文件路径，None 表示只用默认值

        Returns:
            嵌套设置字典 {GROUP: {KEY: value}}
        """
        settings = self.default_settings()
        if override_path is None:
            return settings

        path = Path(override_path)
        # 用户显式指定的文件不存在属于I/O错误，交由调用方处理
        with open(path, 'r', encoding='utf-8') as f:
            override = json.load(f)
        if not isinstance(override, dict):
            raise DomainError(f"配置文件 {path} 应为JSON对象")

        self._merge(settings, override, prefix="")
        logger.info(f"[config] 已合并用户配置 {path.name}")
        return settings

    def _merge(self, target: Dict[str, Any], override: Dict[str, Any], prefix: str):
        """按组合并，组内的值整体替换；未知键记录警告后保留"""
        for key, value in override.items():
            name = f"{prefix}{key}"
            if key not in target:
                logger.warning(f"[config] 未知配置项 {name}，已保留")
                target[key] = copy.deepcopy(value)
            elif prefix == "" and isinstance(target[key], dict) and isinstance(value, dict):
                self._merge(target[key], value, prefix=f"{name}.")
            else:
                target[key] = copy.deepcopy(value)

    def letter_map(self, settings: Optional[Dict[str, Any]] = None) -> Dict[str, int]:
        """评级字母映射，设置中为空时使用内置十档映射"""
        custom = (settings or {}).get("RATINGS", {}).get("LETTER_MAP") or {}
        return dict(custom) if custom else dict(RATING_LETTER_MAP)

    # ==================== 固定数据 ====================

    def get_pair_names(self):
        return sorted(self.market_pairs)

    def get_pair_params(self, pair: str) -> ModelParams:
        """按股票对名称获取市场参数

        Raises:
            DomainError: 股票对不存在
        """
        entry = self.market_pairs.get(pair)
        if not entry or "params" not in entry:
            known = ", ".join(self.get_pair_names()) or "无"
            raise DomainError(f"未知股票对 {pair}（可用: {known}）")
        return ModelParams.from_dict(entry["params"])

    def get_pair_scores(self, pair: str) -> EsgScoreTable:
        entry = self.esg_scores.get(pair)
        if not entry:
            raise DomainError(f"股票对 {pair} 没有ESG评分数据")
        return EsgScoreTable.from_dict(entry)

    def get_figure(self, number: int) -> dict:
        recipe = self.figures.get(str(number))
        if not recipe:
            raise DomainError(f"没有图 {number} 的配方（可用: {', '.join(sorted(self.figures, key=int))}）")
        return recipe

    @staticmethod
    def parse_fixture(reference: str) -> Optional[str]:
        """解析 fixture:<pair> 引用，不是引用时返回 None"""
        if reference and reference.startswith(FIXTURE_PREFIX):
            return reference[len(FIXTURE_PREFIX):]
        return None
