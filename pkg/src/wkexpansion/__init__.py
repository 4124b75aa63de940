"""Wigner-Kirkwood expansion of the quantum partition function."""
__version__ = "0.1.0"
