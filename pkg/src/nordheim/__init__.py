"""Deterministic solver and analysis toolkit for the isotropic bosonic
Nordheim equation: conservative collision quadrature, Bose-Einstein
equilibria and the condensation threshold, entropy dissipation, positivity
preserving time integration, and low-energy concentration detectors."""

__version__ = "0.1.0"
