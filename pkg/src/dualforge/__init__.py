"""Piggyback natural dualities for finite total structures."""

__version__ = "0.1.0"
