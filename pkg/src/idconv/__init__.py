"""Computational tools for infinitely divisible laws on the line and the circle,
their free analogues, and unitary matrix models converging to them."""

__version__ = "0.1.0"
