"""Nonlocal and local degenerate Cahn-Hilliard simulation and verification on the periodic torus."""

__version__ = "0.1.0"
