# managers/__init__.py

from .mc_oracle import MonteCarloOracle
from .estimation import EstimationManager

__all__ = [
    "MonteCarloOracle",
    "EstimationManager",
]
