"""Pseudospectral beta-plane Navier-Stokes solver with determining-mode and
determining-node tooling."""

__version__ = "0.1.0"
