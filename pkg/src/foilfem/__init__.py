"""Finite-element models of foil windings in 2-D planar and axisymmetric geometry."""

__version__ = "0.1.0"
