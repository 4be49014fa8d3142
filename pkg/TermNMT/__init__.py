"""
TermNMT package initializer.

This file makes the `TermNMT` directory a proper Python package so
absolute imports like `from TermNMT.nmt...` work consistently.
"""

__version__ = "0.3.0"

__all__ = []
