"""aplab: exact-arithmetic laboratory for almost-periodic convolutions on finite groups."""

__version__ = "0.1.0"
