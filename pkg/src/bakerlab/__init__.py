"""Numerical laboratory for Baker domains, escaping orbits and inner functions."""
__version__ = "0.1.0"
