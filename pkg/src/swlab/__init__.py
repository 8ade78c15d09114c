"""Swendsen-Wang dynamics on disordered Ising models: simulation and exact analysis."""

__version__ = "0.1.0"
