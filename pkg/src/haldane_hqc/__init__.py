"""Holonomic quantum gates on spin-1 Haldane chains, simulated by exact diagonalization."""

__version__ = "0.1.0"
