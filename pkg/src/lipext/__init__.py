"""Finite-instance laboratory for almost extension of Lipschitz maps from sphere nets."""
from ._kernels import BACKEND as KERNEL_BACKEND

__version__ = "0.1.0"
SCHEMA = "lipext/1"

__all__ = ["KERNEL_BACKEND", "SCHEMA", "__version__"]
