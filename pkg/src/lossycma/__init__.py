"""Characteristic mode analysis of a vertical wire dipole above lossy ground."""

__version__ = "0.1.0"
