"""Symmetry-aware LP relaxations for MAP inference in tied binary pairwise models."""

__version__ = "0.1.0"
