"""Exact rational algebra for dg Lie algebras, their standard complexes and deformation maps."""

__version__ = "0.1.0"
