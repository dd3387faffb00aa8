"""Techno-economics of net-zero homes in Florida and of solar hydrogen."""

__version__ = "0.1.0"
