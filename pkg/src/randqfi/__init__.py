"""Quantum Fisher information from randomized measurements."""

__version__ = "0.1.0"
