"""Numerical laboratory for discrete maximally modulated singular integrals."""

__version__ = "0.1.0"
