"""Variance estimation in the Gaussian sequence model with partially known means."""

__version__ = "0.1.0"
