"""Radially symmetric degenerate fourth-order diffusion with confinement:
time evolution, finite-gamma stationary states, and the stiff-pressure
incompressible limit with its pressure-jump asymptotics."""

__version__ = "0.1.0"
