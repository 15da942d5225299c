"""Numerical toolkit for heat-type operators on Carnot groups."""

__version__ = "0.1.0"
