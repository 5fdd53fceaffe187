"""Riccati equations on Hilbert-Schmidt operator spaces and H-infinity state feedback."""

__version__ = "0.1.0"
