"""
knotflux
========

Geometry of closed space curves and the magnetic fields they carry:
spectrally accurate curve and frame representations, adaptive quadrature,
Biot-Savart fields with near-curve expansions, adapted cables, a planar
solenoid model with its Bessel limit, and exact spectral-flow combinatorics
for cable knots.
"""
from . import cables, curve_io, curves, magnetics, model2d, quadrature, specflow
from .curves import ArcLoop, FourierLoop, GeometryError, MovingFrame
from .quadrature import QuadConfig, default_config

__version__ = "0.1.0"

__all__ = ["cables", "curve_io", "curves", "magnetics", "model2d", "quadrature", "specflow",
           "ArcLoop", "FourierLoop", "GeometryError", "MovingFrame", "QuadConfig", "default_config",
           "__version__"]
