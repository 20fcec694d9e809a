"""Numerical laboratory for symmetric minima of a two-layer ReLU loss.

The package computes the closed-form population loss and its
derivatives (kernel), decomposes matrix space under diagonal
permutation actions (symmetry), refines and classifies families of
symmetric minima (atlas), assembles Hessian spectra from small blocks
(spectrum), traces tangency arcs and extremizes the loss over spheres
(tracer), and cross-checks everything on a planar quartic with the
symmetries of the square (toy). The command line front end regenerates
the tables and figure data (cli).
"""

__version__ = "0.1.0"

from .errors import TangencyLabError

__all__ = ["TangencyLabError", "__version__"]
