"""Numerical kernels for unfoldings of strong homoclinic tangencies."""

__version__ = "0.1.0"
