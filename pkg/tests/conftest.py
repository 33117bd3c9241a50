import logging

import numpy as np
import pandas as pd
import pytest

from esg_merton.config_manager import ConfigManager
from esg_merton.core import AllocationManager, MarketModel, PreferenceManager, WelManager
from esg_merton.managers import EstimationManager, MonteCarloOracle
from esg_merton.models import EsgScoreTable, ModelParams, RiskAversionProfile


@pytest.fixture(autouse=True)
def _package_log_level():
    # CLI 测试会安装stderr处理器并调整级别，测试结束后复位
    package_logger = logging.getLogger("esg_merton")
    yield
    for handler in list(package_logger.handlers):
        if getattr(handler, "_esg_merton_stderr", False):
            package_logger.removeHandler(handler)
    package_logger.setLevel(logging.NOTSET)


@pytest.fixture
def idt_params():
    return ModelParams(r=0.00046, lambda1=6.0464, lambda_g=0.7, lambda_b=2.8672,
                       sigma1=0.0405, sigma2=0.1628, sigma3=0.0486, rho12=0.2937, rho13=0.3354)


@pytest.fixture
def shen_params():
    return ModelParams(r=0.00046, lambda1=6.0464, lambda_g=1.0179, lambda_b=-1.244,
                       sigma1=0.0405, sigma2=0.1064, sigma3=0.0866, rho12=0.291, rho13=0.767)


@pytest.fixture
def idt_scores():
    return EsgScoreTable(e_market=7.3, e_green=9.386363636, e_brown=3.431818182)


@pytest.fixture
def shen_scores():
    return EsgScoreTable(e_market=7.3, e_green=9.378787879, e_brown=4.212121212)


@pytest.fixture
def profile():
    return RiskAversionProfile(alpha_m=-2.5, alpha_g=-1.5, alpha_b=-4.0)


@pytest.fixture
def settings():
    return ConfigManager().default_settings()


@pytest.fixture
def market(settings):
    return MarketModel(settings)


@pytest.fixture
def preferences(settings):
    return PreferenceManager(settings)


@pytest.fixture
def allocation(settings, market, preferences):
    return AllocationManager(settings, market=market, preferences=preferences)


@pytest.fixture
def wel(settings, allocation):
    return WelManager(settings, allocation=allocation)


@pytest.fixture
def oracle(settings, market, allocation, wel):
    return MonteCarloOracle(settings, market=market, allocation=allocation, wel=wel)


@pytest.fixture
def estimation(settings, market, preferences):
    return EstimationManager(settings, market=market, preferences=preferences)


def random_params(rng: np.random.Generator) -> ModelParams:
    """合理范围内的随机市场参数"""
    return ModelParams(
        r=float(rng.uniform(0.0, 0.001)),
        lambda1=float(rng.uniform(2.0, 6.0)),
        lambda_g=float(rng.uniform(-1.0, 1.0)),
        lambda_b=float(rng.uniform(-3.0, 3.0)),
        sigma1=float(rng.uniform(0.03, 0.06)),
        sigma2=float(rng.uniform(0.05, 0.2)),
        sigma3=float(rng.uniform(0.05, 0.2)),
        rho12=float(rng.uniform(-0.5, 0.7)),
        rho13=float(rng.uniform(-0.5, 0.7)),
    )


def random_profile(rng: np.random.Generator, low: float = -5.0, high: float = -1.0) -> RiskAversionProfile:
    return RiskAversionProfile(*(float(a) for a in rng.uniform(low, high, size=3)))


@pytest.fixture
def write_prices_csv(tmp_path):
    """按月生成 date,ticker,adj_close 长表，返回文件路径"""
    def _write(n_months=30, tickers=("SPX", "IDT", "WMT"), seed=1, name="prices.csv"):
        rng = np.random.default_rng(seed)
        dates = pd.date_range("2015-01-01", periods=n_months, freq="MS")
        rows = []
        for k, ticker in enumerate(tickers):
            prices = 100.0 * np.exp(np.cumsum(rng.normal(0.005, 0.04 + 0.02 * k, size=n_months)))
            rows.extend(zip(dates.strftime("%Y-%m-%d"), [ticker] * n_months, prices))
        path = tmp_path / name
        pd.DataFrame(rows, columns=["date", "ticker", "adj_close"]).to_csv(path, index=False)
        return path
    return _write


@pytest.fixture
def write_rates_csv(tmp_path):
    def _write(n_months=30, annual=0.0055, name="rates.csv"):
        dates = pd.date_range("2015-01-01", periods=n_months, freq="MS")
        path = tmp_path / name
        pd.DataFrame({"date": dates.strftime("%Y-%m-%d"), "yield_annualized": annual}).to_csv(path, index=False)
        return path
    return _write


@pytest.fixture
def ratings_csv(tmp_path):
    """IDT 13 个 AAA 与 20 个 AA，WMT 全部 BB，另有一家 A 级公司"""
    rows = []
    for i in range(33):
        rows.append((f"2020-{(i % 12) + 1:02d}-01", "IDT", "AAA" if i < 13 else "AA"))
    for i in range(12):
        rows.append((f"2020-{i + 1:02d}-01", "WMT", "bb"))
        rows.append((f"2020-{i + 1:02d}-01", "KO", "A"))
    path = tmp_path / "ratings.csv"
    pd.DataFrame(rows, columns=["date", "company", "rating"]).to_csv(path, index=False)
    return path


@pytest.fixture
def make_params():
    return random_params


@pytest.fixture
def make_profile():
    return random_profile
