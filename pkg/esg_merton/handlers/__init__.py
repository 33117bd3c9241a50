# handlers/__init__.py

from .estimation_handler import EstimationHandler
from .allocation_handler import AllocationHandler
from .wel_handler import WelHandler
from .verify_handler import VerifyHandler
from .reproduce_handler import ReproduceHandler

__all__ = [
    "EstimationHandler",
    "AllocationHandler",
    "WelHandler",
    "VerifyHandler",
    "ReproduceHandler",
]
