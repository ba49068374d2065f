"""Finite-difference/quadrature toolkit for the 1D fractional Laplacian."""

from .kernel import Kernel, KernelParams, Order, c_const, make_kernel
from .special import gamma_fn, hyp2f1

__all__ = ["Kernel", "KernelParams", "Order", "c_const", "make_kernel", "gamma_fn", "hyp2f1"]
__version__ = "0.1.0"
