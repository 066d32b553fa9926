"""Numerical verification toolkit for oscillatory solutions of the 6D energy-critical heat equation."""

__version__ = "0.1.0"
