"""Birman-Schwinger analysis of the one-dimensional Coulomb problem."""

__version__ = "0.1.0"
