"""Finite element model of a single PEM fuel cell with a constant ledger and inequality checks."""

__version__ = "0.1.0"
