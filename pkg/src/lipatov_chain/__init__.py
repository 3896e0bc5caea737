"""Numerics for the s = -1 integrable chain and its entanglement dynamics."""

__version__ = "0.1.0"
