"""Benders decomposition MILP solver with annealing-style QUBO master backends."""

__version__ = "0.1.0"
