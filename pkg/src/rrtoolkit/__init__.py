"""Exact toolkit for sprays on real algebraic varieties, spray gluing and
regular approximation with interpolation."""

__version__ = "0.1.0"
