"""Pfaffian correlators, bordered-determinant bounds and disorder ensembles for XY chains."""

__version__ = "0.1.0"
