"""Spectral-Lagrangian solver for the Boltzmann equation of multi-level gases."""

__version__ = "0.1.0"
