"""Measurement-based quantum computation on a Z2 string-net resource state."""

__version__ = "0.1.0"
