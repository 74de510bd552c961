"""Numerical laboratory for weighted Bergman projections with exponentially decaying weights."""

from .domains import BoundaryError, DomainSpec, WeightSpec
from .moments import AuxiliaryDiscTable, MomentTable, boundary_moment
from .numerics import LogValue
from .quadrature import QuadratureError, QuadratureSpec

__version__ = "0.1.0"

__all__ = [
    "AuxiliaryDiscTable", "BoundaryError", "DomainSpec", "LogValue", "MomentTable", "QuadratureError",
    "QuadratureSpec", "WeightSpec", "boundary_moment", "__version__",
]
