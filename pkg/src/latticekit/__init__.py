"""Lattice-based L2 and L-infinity function approximation in weighted Korobov spaces."""

__version__ = "0.1.0"
