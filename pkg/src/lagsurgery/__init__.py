"""Numerical and symbolic toolkit for Lagrangian antisurgery and 0-surgery.

Subpackages and modules
-----------------------
core          symplectic algebra, Maslov index, planar curves, double points
profiles      smooth cutoff profiles
handle        the handle model Gamma and its ends Lambda, Lambda'
zero_surgery  resolution of the double point, Maslov indices, the model W
topology      Euler characteristic, orientability and descriptor bookkeeping
atlas         rotation Lagrangians in C^2 and the CP^n family L_r
report, svg, cli  configuration, JSON reports, figures and the command line
"""

from __future__ import annotations

__version__ = "0.1.0"

from .errors import (
    DimensionError,
    LagSurgeryError,
    ModelViolation,
    NotRepresentable,
    ParameterError,
    RefinementNeeded,
)

__all__ = [
    "DimensionError",
    "LagSurgeryError",
    "ModelViolation",
    "NotRepresentable",
    "ParameterError",
    "RefinementNeeded",
    "__version__",
]
