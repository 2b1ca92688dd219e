"""Numerical toolkit for quantum stochastic exponents and their generators."""

__version__ = "0.1.0"
