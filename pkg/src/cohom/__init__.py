"""Coherent-light anticorrelation bench: analytic and Monte Carlo engines."""

__version__ = "0.1.0"
