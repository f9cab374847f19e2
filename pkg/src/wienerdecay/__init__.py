"""Numerical harness for decay estimates of solutions to quasilinear elliptic
inequalities div A(x, Du) + b(x)|Du|^α >= 0 near a boundary point.

Modules
-------
geometry   domains, shells, lattice grids and sphere-section meshes
capacity   discrete p-capacity, ε-inner diameter, μ_δ and the cone condition
spectral   first Dirichlet eigenvalue of the spherical p-Laplacian
profiles   radial profiles Λ, q, 𝒟 and the coefficient b
estimates  integrands, divergence tests, bound curves, closed-form catalog
pde        planar model solves and M(r; u) measurement
experiment config-driven runs producing deterministic bundles
"""

__version__ = "0.1.0"

from .errors import (ConvergenceError, DataError, LawViolation, PreconditionError, RefusedError,  # noqa: E402
                     RegimeError, StandingAssumptionError)
from .geometry import DomainSpec, make_domain  # noqa: E402
from .profiles import Coefficient, ExponentConfig, Profile, log_ladder  # noqa: E402

__all__ = ["ConvergenceError", "DataError", "LawViolation", "PreconditionError", "RefusedError", "RegimeError",
           "StandingAssumptionError", "DomainSpec", "make_domain", "Coefficient", "ExponentConfig", "Profile",
           "log_ladder", "__version__"]
