"""Spectral and sum-of-squares hierarchies for forms on the sphere, with de Finetti experiments."""

from . import definetti, hierarchy, mindex, poly, sdp, symmat
from .poly import Form, parse_form

__all__ = ["Form", "parse_form", "definetti", "hierarchy", "mindex", "poly", "sdp", "symmat"]
__version__ = "0.1.0"
