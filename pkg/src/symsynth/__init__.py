"""Synthesis of rotation-symmetric reactive systems."""

__version__ = "0.1.0"
