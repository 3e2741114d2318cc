"""Numerical experiments on the stability of Kolmogorov flow on a non-square torus."""

__version__ = "0.1.0"
