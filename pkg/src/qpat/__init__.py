"""Quantitative photoacoustic inversion: recover sound speed and optical
absorption directly from boundary measurements of the acoustic wave field."""

__version__ = "0.1.0"
