"""Minimum-torque, variable-time excavation trajectory optimisation."""

__version__ = "0.1.0"
