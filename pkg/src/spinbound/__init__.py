"""Numerics for correlation-decay bounds of two-dimensional spin models with
long-range couplings, long-range percolation and shorted resistor networks."""

__version__ = "0.1.0"
