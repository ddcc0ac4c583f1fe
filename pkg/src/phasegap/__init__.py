"""Toy-scale numerics for gapped/gapless phase diagrams built from tilings,
quantum phase estimation and history-state Hamiltonians."""

__version__ = "0.1.0"
