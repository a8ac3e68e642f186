"""Computable eigenvalue and probability bounds.

* Temple-type lower bounds on the torus ground state energy, from the
  integrals of a truncated potential.
* Chernoff bound for binomial upper tails and the resulting bound on the
  probability that too few couplings exceed the truncation level.
* Upper bound on the ground state energy of a box with a potential of
  given L^1 norm.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

from .alloy import SECOND_UNIT_TORUS_EIGENVALUE, periodized_potential, truncate_config
from .bernstein import heat_kernel_at_zero
from .errors import ConfigurationError, DomainError, PreconditionError
from .torus import TorusGrid

__all__ = [
    "TempleInputs",
    "temple_inputs",
    "temple_lower_bound",
    "temple_delta_bound",
    "binomial_tail_bound",
    "binomial_upper_tail",
    "complement_probability_bound",
    "complement_smallness",
    "dirichlet_upper_bound",
    "construction_norm",
]


@dataclass(frozen=True)
class TempleInputs:
    """Ingredients of the Temple lower bound on a torus of side ``M``.

    Attributes
    ----------
    intV, intV2 : float
        Integrals of the truncated potential and of its square over the torus.
    M, d : int
        Side and dimension.
    alpha, C1 : float
        Kinetic low-frequency order and lower scaling constant.
    D0 : float
        Truncation constant.
    normW1 : float
        ``||W||_1`` of the single-site profile.
    quadrature : bool
        True when ``intV2`` came from grid quadrature rather than a closed form.
    """

    intV: float
    intV2: float
    M: int
    alpha: float
    C1: float
    D0: float
    normW1: float
    d: int = 1
    quadrature: bool = False

    @property
    def gap(self):
        """``(C1 mu^(alpha/2) - D0 ||W||_1) M^-alpha``."""
        return (self.C1 * SECOND_UNIT_TORUS_EIGENVALUE ** (self.alpha / 2)
                - self.D0 * self.normW1) / self.M**self.alpha


def temple_inputs(config, site, phi, D0, n=8):
    """Build :class:`TempleInputs` for the truncation of ``config``.

    ``intV`` is always exact, ``||W||_1 * sum(q~)``. ``intV2`` equals
    ``||W||_2^2 * sum(q~^2)`` when translates of ``W`` do not overlap (support
    half-width at most 1/2); otherwise it is a grid sum with ``n`` nodes per
    unit length and the result is flagged.
    """
    tr = truncate_config(config, D0, phi.alpha)
    q = tr.values
    intV = site.norm1 * math.fsum(q.ravel())
    if site.radius <= 0.5:
        intV2 = site.norm2sq * math.fsum((q**2).ravel())
        quad = False
    else:
        grid = TorusGrid(config.M, config.d, n)
        V = periodized_potential(tr, site, grid)
        intV2 = math.fsum((V**2).ravel()) * grid.spacing**config.d
        quad = True
    return TempleInputs(intV, intV2, config.M, phi.alpha, phi.c1, D0, site.norm1,
                        d=config.d, quadrature=quad)


def temple_lower_bound(inp):
    """``M^-d [intV - intV2 / ((C1 mu^(alpha/2) - D0 ||W||_1) M^-alpha)]``.

    The value may be negative and is returned unclamped.

    Raises
    ------
    PreconditionError
        If the trial energy ``intV / M^d`` is not below the spectral gap
        estimate ``C1 mu^(alpha/2) / M^alpha``, exceeds the truncation level
        ``D0 ||W||_1 / M^alpha``, or the gap is not positive.
    """
    if inp.intV < 0 or inp.intV2 < 0:
        raise DomainError("potential integrals must be nonnegative")
    vol = inp.M**inp.d
    energy = inp.intV / vol
    lam2 = inp.C1 * SECOND_UNIT_TORUS_EIGENVALUE ** (inp.alpha / 2) / inp.M**inp.alpha
    if not energy < lam2:
        raise PreconditionError(
            f"Temple inequality needs intV/M^d < C1 mu^(alpha/2)/M^alpha ({energy} >= {lam2})")
    cap = inp.D0 * inp.normW1 / inp.M**inp.alpha
    if energy > cap * (1 + 1e-12):
        raise PreconditionError(
            f"potential is not truncated at D0/M^alpha: intV/M^d = {energy} > D0 ||W||_1/M^alpha = {cap}")
    if not inp.gap > 0:
        raise PreconditionError("C1 mu^(alpha/2) - D0 ||W||_1 must be positive")
    return (inp.intV - inp.intV2 / inp.gap) / vol


def temple_delta_bound(delta, D0, M, alpha, site, C1):
    """Ground state lower bound on configurations with a ``delta`` fraction of large couplings.

    ``D0 delta [||W||_1 - (2M0)^d D0 ||W||_2^2 / (C1 mu^(alpha/2) - D0 ||W||_1)] M^-alpha``.
    """
    if not 0 < delta < 1:
        raise DomainError("delta must lie in (0, 1)")
    if M < site.M0:
        raise DomainError(f"need M >= M0 = {site.M0}")
    gap = C1 * SECOND_UNIT_TORUS_EIGENVALUE ** (alpha / 2) - D0 * site.norm1
    if gap <= 0:
        raise ConfigurationError("C1 mu^(alpha/2) - D0 ||W||_1 must be positive")
    bracket = site.norm1 - (2 * site.M0) ** site.d * D0 * site.norm2sq / gap
    if bracket <= 0:
        raise ConfigurationError(f"bracket {bracket} is not positive; D0 is too large for this profile")
    return D0 * delta * bracket / M**alpha


def binomial_tail_bound(n, p, gamma):
    """Chernoff bound ``P[Bin(n, p) >= gamma n] <= ((1-p)/(1-gamma))^((1-gamma) n) (p/gamma)^(gamma n)``."""
    if not 0 < p < 1:
        raise DomainError("p must lie in (0, 1)")
    if not p < gamma <= 1:
        raise PreconditionError(f"need p < gamma <= 1, got p={p}, gamma={gamma}")
    if gamma == 1:
        return p**n
    log = (1 - gamma) * n * math.log((1 - p) / (1 - gamma)) + gamma * n * math.log(p / gamma)
    return min(1.0, math.exp(log))


def binomial_upper_tail(n, p, k):
    """Exact ``P[Bin(n, p) >= k]`` by summing the mass function."""
    k = max(0, math.ceil(k))
    return math.fsum(math.comb(n, j) * p**j * (1 - p) ** (n - j) for j in range(k, n + 1))


def complement_smallness(delta0, pM):
    """``(1/(1-delta0)) (1/delta0)^(delta0/(1-delta0)) sqrt(pM)``; must be <= 1."""
    return (1 / (1 - delta0)) * (1 / delta0) ** (delta0 / (1 - delta0)) * math.sqrt(pM)


def complement_probability_bound(M, delta0, pM, d=1):
    """Bound ``pM^((1-delta0) M^d / 2)`` on the probability that fewer than
    ``delta0 M^d`` couplings exceed the truncation level.

    ``pM`` is the probability that a single coupling does not exceed it.

    Raises
    ------
    PreconditionError
        If the smallness condition fails; take larger ``M`` (smaller ``pM``)
        or change ``delta0``.
    """
    if not 0 < delta0 < 1:
        raise DomainError("delta0 must lie in (0, 1)")
    if not 0 < pM < 1:
        raise DomainError("pM must lie in (0, 1)")
    s = complement_smallness(delta0, pM)
    if s > 1:
        raise PreconditionError(f"smallness condition fails ({s} > 1); increase M or adjust delta0")
    return math.exp(-(1 - delta0) / 2 * M**d * math.log(1 / pM))


def dirichlet_upper_bound(phi, M, d, normV1):
    """Upper bound on the ground state energy in a box of side ``M``.

    ``phi(d pi^2/M^2) + e * p_s(0) * normV1`` with ``s = 1/phi(d pi^2/M^2)``.
    """
    if M <= 0:
        raise DomainError("M must be positive")
    if normV1 < 0:
        raise DomainError("normV1 must be nonnegative")
    lam = float(phi(d * math.pi**2 / M**2))
    if normV1 == 0:
        return lam
    return lam + math.e * heat_kernel_at_zero(phi, 1 / lam, d) * normV1


def construction_norm(kappa, M, site):
    """``||V||_1 = kappa (3M)^d ||W||_1`` of the potential with couplings at most
    ``kappa`` on the sites of a box of side ``3M``."""
    return kappa * (3 * M) ** site.d * site.norm1
