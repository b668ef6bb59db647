"""Fatigue life estimation under chaotic variable-amplitude loading."""

__version__ = "0.1.0"
