"""Spectra, isomodulus eigenfunctions and saturation-based bilinear control
for Schrodinger operators on circles, intervals and metric graphs."""

__version__ = "0.1.0"
