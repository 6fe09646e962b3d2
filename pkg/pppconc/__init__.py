"""Poisson point process simulation, concentration bounds and adaptive intensity estimation."""

__version__ = "0.1.0"
