"""A-optimal source-encoding weights for the 2-D frequency-domain Helmholtz inverse problem."""
from .kernels import BACKEND as KERNEL_BACKEND

__version__ = "0.1.0"

__all__ = ["KERNEL_BACKEND", "__version__"]
