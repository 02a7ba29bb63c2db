"""Simulation and reinforcement-learning control of a suspended 4-cable parallel robot."""

__version__ = "0.1.0"
