"""Analytic computation of the prime counting function with interval bounds."""

__version__ = "0.1.0"
