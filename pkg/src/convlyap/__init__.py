"""Converse SOS Lyapunov functions via Picard iteration."""

__version__ = "0.1.0"
