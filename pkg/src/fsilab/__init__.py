"""Numerical laboratory for a viscous fluid coupled to a small rigid disk."""
__version__ = "0.1.0"
