"""Rate-independent bulk damage in finite-strain second-gradient hyperelasticity.

Alternating-minimization (Rothe) simulator with solution certificates.
"""
from .kernels import BACKEND

__version__ = "0.1.0"

__all__ = ["BACKEND", "__version__"]
