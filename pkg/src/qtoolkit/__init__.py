"""Finite-dimensional workbench for algebraic quantum theory.

Everything here is exactly testable: truncated Fock spaces with explicit
hbar, normal-ordered Weyl/Clifford polynomial algebras, Grassmann
calculus, adiabatic decoherence ensembles, correlation functionals with
their doubled dynamics, closed-form quantum gases with KMS checks, and
cyclic (GNS) representations with induced generators.  Symbolic routes
are exact over the rationals or Gaussian integers; matrix routes are
held to 1e-12 against closed forms or brute-force oracles.
"""

from . import (cli, decoherence, evolution, fock, geometry_gns, grassmann,
               lfunctional, serialize, statmech, weyl_clifford)
from .errors import NumericalError, ValidationError

__version__ = "0.1.0"

__all__ = [
    "cli",
    "decoherence",
    "evolution",
    "fock",
    "geometry_gns",
    "grassmann",
    "lfunctional",
    "serialize",
    "statmech",
    "weyl_clifford",
    "NumericalError",
    "ValidationError",
    "__version__",
]
