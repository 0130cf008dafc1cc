"""Moderately interacting 2D vortex particles with common noise, measured against their limit."""

__version__ = "0.1.0"
