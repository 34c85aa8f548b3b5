"""Exact finite-volume Gibbs measures on Z^d and their entropy identities."""

__version__ = "0.1.0"
