# core/__init__.py

from .market_model import MarketModel
from .preferences import PreferenceManager
from .allocation import AllocationManager
from .wel import WelManager

__all__ = [
    "MarketModel",
    "PreferenceManager",
    "AllocationManager",
    "WelManager",
]
