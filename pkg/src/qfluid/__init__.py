"""Semiclassical quantum fluid models from maximum-entropy moment closures.

Modules
-------
specfun
    Scaled polylogarithms, their inverse and Fermi-like integrals.
fields
    Periodic grids, difference operators and snapshot CSV files.
closure
    Lagrange multipliers, pressure and the modified Bohm potential as functions of density.
equilibrium
    Equilibrium Wigner symbols, truncated Moyal products and momentum quadrature.
solvers
    Hydrodynamic and diffusive time integration, Schroedinger reference solver.
app
    Configuration parsing and the ``qfluid`` command line.
"""

__version__ = "0.1.0"

from .exceptions import (  # noqa: E402
    ConvergenceError,
    DomainError,
    NumericalAbort,
    SupercriticalError,
    UnsupportedBranchError,
)
from .specfun import Statistics  # noqa: E402
from .fields import Grid  # noqa: E402

__all__ = [
    "__version__",
    "Statistics",
    "Grid",
    "DomainError",
    "SupercriticalError",
    "UnsupportedBranchError",
    "ConvergenceError",
    "NumericalAbort",
]
