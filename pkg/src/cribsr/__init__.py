"""Successive refinement with cribbing decoders: regions, dual MAC regions, codec simulation."""

__version__ = "0.1.0"
