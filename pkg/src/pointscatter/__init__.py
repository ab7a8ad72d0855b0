"""Exact forward and inverse scattering for multipoint point-scatterer potentials."""

__version__ = "0.1.0"
