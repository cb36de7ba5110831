"""Numerics for random approximate quantum information masking."""

__version__ = "0.1.0"
