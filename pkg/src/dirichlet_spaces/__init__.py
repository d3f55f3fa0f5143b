"""Numerical toolkit for Hardy and Bergman spaces of Dirichlet series and their composition operators."""

__version__ = "0.1.0"
