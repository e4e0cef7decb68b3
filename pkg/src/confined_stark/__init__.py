"""Numerical laboratory for the confined two-dimensional Stark operator."""
__version__ = "0.1.0"
