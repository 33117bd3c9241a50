# data/data_manager.py

import json
from pathlib import Path
from typing import Any, Dict, Iterable, Optional, Union

import pandas as pd

from ..errors import DataParseError, DomainError, RatingParseError
from ..models import EsgScoreTable, ModelParams
from ..models_extended import EstimatedParams
from ..utils.log import logger
from .default_configs import PRICES_COLUMNS, RATES_COLUMNS, RATINGS_COLUMNS

PathLike = Union[str, Path]


class DataManager:
    """文件读写：参数/评分JSON、CSV输出、价格/利率/评级输入"""

    def __init__(self, json_indent: int = 2):
        self.json_indent = json_indent

    # ===== JSON =====

    def _read_json_object(self, path: PathLike) -> Dict[str, Any]:
        path = Path(path)
        with open(path, 'r', encoding='utf-8') as f:
            text = f.read()
        try:
            data = json.loads(text)
        except json.JSONDecodeError as e:
            raise DataParseError(f"{path.name} 不是合法的JSON: {e.msg}", row=e.lineno) from e
        if not isinstance(data, dict):
            raise DataParseError(f"{path.name} 应为JSON对象")
        return data

    def read_params(self, path: PathLike) -> ModelParams:
        """读取参数文件"""
        data = self._read_json_object(path)
        try:
            params = ModelParams.from_dict(data)
        except (TypeError, ValueError) as e:
            if isinstance(e, DomainError):
                raise
            raise DataParseError(f"{Path(path).name} 中的参数无法解析: {e}") from e
        logger.info(f"[data] 已读取参数文件 {Path(path).name}")
        return params

    def write_params(self, params: Union[ModelParams, EstimatedParams], path: Optional[PathLike] = None) -> str:
        """写出参数文件，返回JSON文本；估计结果附带标准误与诊断信息"""
        data = params.to_dict()
        return self.write_json(data, path)

    def read_scores(self, path: PathLike) -> EsgScoreTable:
        data = self._read_json_object(path)
        return EsgScoreTable.from_dict(data)

    def to_json_text(self, data: Any) -> str:
        # json 对浮点数使用 repr，读回时逐位一致
        return json.dumps(data, ensure_ascii=False, indent=self.json_indent, allow_nan=True) + "\n"

    def write_json(self, data: Any, path: Optional[PathLike] = None) -> str:
        text = self.to_json_text(data)
        if path is not None:
            self.write_text(text, path)
        return text

    # ===== CSV 输出 =====

    @staticmethod
    def frame_to_csv(frame: pd.DataFrame) -> str:
        """DataFrame 转为带表头、无索引、LF换行的CSV文本"""
        return frame.to_csv(index=False, lineterminator="\n")

    @staticmethod
    def write_text(text: str, path: PathLike):
        path = Path(path)
        with open(path, 'w', encoding='utf-8', newline='\n') as f:
            f.write(text)
        logger.info(f"[data] 已写出 {path}")

    def write_csv(self, frame: pd.DataFrame, path: Optional[PathLike] = None) -> str:
        text = self.frame_to_csv(frame)
        if path is not None:
            self.write_text(text, path)
        return text

    # ===== CSV 输入 =====

    @staticmethod
    def _read_raw_csv(path: PathLike, columns: Iterable[str]) -> pd.DataFrame:
        """按字符串读取CSV并检查表头"""
        frame = pd.read_csv(path, dtype=str, keep_default_na=False, skipinitialspace=True)
        frame.columns = [str(c).strip() for c in frame.columns]
        missing = [c for c in columns if c not in frame.columns]
        if missing:
            raise DataParseError(f"{Path(path).name} 缺少列: {', '.join(missing)}")
        return frame[list(columns)]

    @staticmethod
    def _parse_dates(values: pd.Series, name: str) -> pd.Series:
        parsed = pd.to_datetime(values.str.strip(), errors="coerce", format="ISO8601")
        bad = parsed.isna()
        if bad.any():
            row = int(bad.to_numpy().argmax()) + 1
            raise DataParseError(f"{name} 中的日期无法解析: {values.iloc[row - 1]!r}", row=row)
        return parsed

    @staticmethod
    def _parse_numbers(values: pd.Series, name: str, positive: bool = False) -> pd.Series:
        parsed = pd.to_numeric(values.str.strip(), errors="coerce")
        bad = parsed.isna()
        if positive:
            bad = bad | (parsed <= 0)
        if bad.any():
            row = int(bad.to_numpy().argmax()) + 1
            kind = "必须为正数" if positive else "无法解析为数字"
            raise DataParseError(f"{name} 中的数值{kind}: {values.iloc[row - 1]!r}", row=row)
        return parsed.astype(float)

    def read_prices(self, path: PathLike) -> pd.DataFrame:
        """读取长格式价格文件 date,ticker,adj_close"""
        raw = self._read_raw_csv(path, PRICES_COLUMNS)
        name = Path(path).name
        frame = pd.DataFrame({
            "date": self._parse_dates(raw["date"], name),
            "ticker": raw["ticker"].str.strip(),
            "adj_close": self._parse_numbers(raw["adj_close"], name, positive=True),
        })
        duplicated = frame.duplicated(subset=["date", "ticker"])
        if duplicated.any():
            row = int(duplicated.to_numpy().argmax()) + 1
            raise DataParseError(f"{name} 中同一日期与代码重复出现", row=row)
        logger.info(f"[data] 已读取价格文件 {name} ({len(frame)} 行)")
        return frame

    def read_rates(self, path: PathLike) -> pd.DataFrame:
        """读取无风险利率文件 date,yield_annualized（小数形式的年化收益率）"""
        raw = self._read_raw_csv(path, RATES_COLUMNS)
        name = Path(path).name
        frame = pd.DataFrame({
            "date": self._parse_dates(raw["date"], name),
            "yield_annualized": self._parse_numbers(raw["yield_annualized"], name),
        })
        duplicated = frame.duplicated(subset=["date"])
        if duplicated.any():
            row = int(duplicated.to_numpy().argmax()) + 1
            raise DataParseError(f"{name} 中日期重复", row=row)
        logger.info(f"[data] 已读取利率文件 {name} ({len(frame)} 行)")
        return frame

    def read_ratings(self, path: PathLike) -> pd.DataFrame:
        """读取评级文件 date,company,rating"""
        try:
            raw = self._read_raw_csv(path, RATINGS_COLUMNS)
        except DataParseError as e:
            raise RatingParseError(e.detail, row=e.row) from e
        name = Path(path).name
        try:
            dates = self._parse_dates(raw["date"], name)
        except DataParseError as e:
            raise RatingParseError(e.detail, row=e.row) from e
        frame = pd.DataFrame({
            "date": dates,
            "company": raw["company"].str.strip(),
            "rating": raw["rating"].str.strip().str.upper(),
        })
        empty = frame["company"] == ""
        if empty.any():
            row = int(empty.to_numpy().argmax()) + 1
            raise RatingParseError("公司名称为空", row=row)
        logger.info(f"[data] 已读取评级文件 {name} ({len(frame)} 行)")
        return frame
