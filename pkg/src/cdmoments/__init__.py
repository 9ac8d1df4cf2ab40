"""Divisor problem with congruence conditions: error terms, Voronoi-type
expansion, square-root relations and fourth-moment constants."""

from .core_arith import CongruenceSpec
from .errors import CacheRejected, CdmError, InvalidArgument, OutOfRange, ResourceLimit

__version__ = "0.1.0"

__all__ = ["CongruenceSpec", "CacheRejected", "CdmError", "InvalidArgument", "OutOfRange", "ResourceLimit"]
