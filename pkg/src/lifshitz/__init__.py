"""Numerical laboratory for Lifshitz tails of random fractional Schrodinger operators.

Submodules
----------
bernstein
    Bernstein functions and free subordinate heat kernels.
torus
    Torus operators, heat kernels, matrix-free Schrodinger operators and
    their low spectrum.
alloy
    Single-site profiles, coupling laws, configurations, periodization.
bounds
    Temple, Chernoff and box upper bounds.
rates
    Rate functions ``g, j, x_t, h`` and the Tauberian calculus.
lab
    Ensemble estimators of ``L(t)`` and ``l(lambda)``, studies, reports.
"""
__version__ = "0.1.0"

from .errors import ConfigurationError, DomainError, NumericError, PreconditionError  # noqa: E402

__all__ = ["ConfigurationError", "DomainError", "NumericError", "PreconditionError", "__version__"]
