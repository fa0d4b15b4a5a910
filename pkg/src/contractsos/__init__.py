"""Contraction metric search for polynomial systems via SOS programming."""

__version__ = "0.1.0"
