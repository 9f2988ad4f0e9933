"""First l2 Betti numbers, harmonic Dirichlet functions and percolation thresholds on exhaustions."""

__version__ = "0.1.0"
