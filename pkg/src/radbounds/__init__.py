"""Explicit a-priori constants and desk-scale FEM verification for
nonlinear radiation-type elliptic boundary value problems."""

from . import bounds, constants, errors, model, solver

__all__ = ["bounds", "constants", "errors", "model", "solver"]
__version__ = "0.1.0"
