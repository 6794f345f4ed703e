"""exlab: exactly solvable out-of-equilibrium lattice gases.

Integrable exclusion processes with open and periodic boundaries, their
matrix-product stationary states, closed-form observables, spectra, and
hydrodynamic limits. Everything analytic is cross-checked against brute
force at small sizes; exact arithmetic (rationals) is used wherever the
theory is exact, arbitrary-precision floats elsewhere.
"""

from exlab.scalars import precision, RationalFunction, rf_derivative_at
from exlab.laurent import LaurentPoly, laurent_apply_si

__version__ = "0.1.0"

__all__ = [
    "precision",
    "RationalFunction",
    "rf_derivative_at",
    "LaurentPoly",
    "laurent_apply_si",
]
