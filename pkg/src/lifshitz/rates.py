"""Rate functions of the Lifshitz-tail asymptotics and the Tauberian calculus.

With ``F`` the CDF of the couplings:

* ``g(x) = -log F(D0 / x)``
* ``j(x) = x**(d+alpha) * g(x**alpha)``, increasing for ``x >= x0``
* ``x_t = j^{-1}(t)`` and ``h(t) = g(x_t**alpha)``, so ``t = x_t**(d+alpha) h(t)``
* ``gamma = d / (d + alpha)``; the decay rate of ``log L(t)`` is
  ``t**gamma * h(t)**(1-gamma)``.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass

from scipy import optimize

from ._textform import format_form, parse_form
from .alloy import LatticeLaw, parse_law
from .errors import DomainError, NumericError

__all__ = [
    "RateBundle",
    "parse_bundle",
    "g_eval",
    "j_eval",
    "x_t",
    "h_eval",
    "rate_denominator",
    "Infinite",
    "INFINITE",
    "loglog_limits",
    "family_loglog_exponent",
    "tauber_lower",
    "tauber_upper",
    "tauber_substitution",
]

MAX_DOUBLINGS = 1000


class Infinite(enum.Enum):
    """Marker for an infinite loglog exponent."""

    INFINITE = "inf"

    def __repr__(self):
        return "INFINITE"


INFINITE = Infinite.INFINITE


@dataclass(frozen=True)
class RateBundle:
    """Constants ``(d, alpha, D0)`` and a lattice law, with the derived rate functions."""

    d: int
    alpha: float
    D0: float
    law: LatticeLaw

    def __post_init__(self):
        if int(self.d) != self.d or self.d < 1:
            raise DomainError("d must be a positive integer")
        if not 0 < self.alpha <= 2:
            raise DomainError("alpha must lie in (0, 2]")
        if not self.D0 > 0:
            raise DomainError("D0 must be positive")

    @property
    def gamma(self):
        return self.d / (self.d + self.alpha)

    @property
    def x0(self):
        k0 = self.law.kappa0
        return 0.0 if math.isinf(k0) else (self.D0 / k0) ** (1 / self.alpha)

    @property
    def t0(self):
        x0 = self.x0
        return 0.0 if x0 == 0 else self.j(x0)

    def g(self, x):
        return g_eval(self, x)

    def log_g(self, x):
        """``log g(x)``; finite even where ``g`` overflows."""
        if not x > 0:
            raise DomainError(f"g needs x > 0, got {x}")
        return self.law.log_neg_log_cdf(self.D0 / x)

    def j(self, x):
        return j_eval(self, x)

    def log_j(self, x):
        return (self.d + self.alpha) * math.log(x) + self.log_g(x**self.alpha)

    def x_t(self, t):
        return x_t(self, t)

    def h(self, t):
        return h_eval(self, t)

    def rate_denominator(self, t):
        return rate_denominator(self, t)

    def to_text(self):
        return format_form("rates", [("d", int(self.d)), ("alpha", float(self.alpha)),
                                     ("D0", float(self.D0)), ("law", self.law.to_text())])

    def __str__(self):
        return self.to_text()


def parse_bundle(text):
    """Parse ``rates(d=1,alpha=2.0,D0=6.5797,law=exponential(gamma=1.0))``."""
    name, kw = parse_form(text)
    if name != "rates":
        raise ValueError(f"expected a rates(...) form, got {name!r}")
    try:
        return RateBundle(int(kw["d"]), float(kw["alpha"]), float(kw["D0"]), parse_law(kw["law"]))
    except KeyError as exc:
        raise ValueError(f"missing key {exc} in rates form") from None


def g_eval(bundle, x):
    """``g(x) = -log F(D0/x)`` for ``x > 0``.

    Raises
    ------
    DomainError
        If ``x <= 0`` or ``F(D0/x) = 0``.
    """
    x = float(x)
    if not x > 0:
        raise DomainError(f"g needs x > 0, got {x}")
    lf = float(bundle.law.log_cdf(bundle.D0 / x))
    if lf == -math.inf:
        raise DomainError(f"F(D0/x) = 0 at x = {x}")
    return -lf if lf < 0 else 0.0


def j_eval(bundle, x):
    """``j(x) = x**(d+alpha) g(x**alpha)``."""
    return float(x) ** (bundle.d + bundle.alpha) * g_eval(bundle, float(x) ** bundle.alpha)


def _check_t(bundle, t):
    t = float(t)
    if not t > 0 or not math.isfinite(t):
        raise DomainError(f"t must be positive and finite, got {t}")
    if t < bundle.t0 * (1 - 1e-12):
        raise DomainError(f"t = {t} lies below t0 = {bundle.t0}")
    return t


def _seed(bundle, t):
    if bundle.law.family == "doubleexp":
        # j(x) ~ x^(d+alpha) exp(x^alpha/D0): leading-order inverse
        return (bundle.D0 * math.log(max(t, math.e))) ** (1 / bundle.alpha)
    return max(1.0, 2 * bundle.x0)


def x_t(bundle, t):
    """Solve ``j(x) = t`` for ``x >= x0``.

    A bracket is grown by doubling from a family-dependent seed and the root
    of ``log j(x) - log t`` is polished by Brent's method in ``log x``.

    Raises
    ------
    NumericError
        If the bracket does not close within 1000 doublings.
    """
    t = _check_t(bundle, t)
    x0 = bundle.x0
    logt = math.log(t)

    def f(u):
        return bundle.log_j(math.exp(u)) - logt

    s = _seed(bundle, t)
    lo = hi = math.log(s)
    steps = 0
    while f(hi) < 0:
        hi += math.log(2)
        steps += 1
        if steps > MAX_DOUBLINGS:
            raise NumericError("x_t bracket did not close", t=t, upper=math.exp(hi))
    steps = 0
    while True:
        if x0 > 0 and lo <= math.log(x0):
            lo = math.log(x0)
            break
        if f(lo) <= 0:
            break
        lo -= math.log(2)
        steps += 1
        if steps > MAX_DOUBLINGS:
            raise NumericError("x_t bracket did not close", t=t, lower=math.exp(lo))
    if f(lo) == 0:
        return math.exp(lo)
    if f(lo) > 0:
        return x0
    u = optimize.brentq(f, lo, hi, xtol=1e-15, rtol=1e-15, maxiter=500)
    return math.exp(u)


def h_eval(bundle, t):
    """``h(t) = g(x_t**alpha)``; satisfies ``t = x_t**(d+alpha) h(t)``."""
    return g_eval(bundle, x_t(bundle, t) ** bundle.alpha)


def rate_denominator(bundle, t):
    """``t**gamma h(t)**(1-gamma)``, which equals ``t / x_t**alpha``."""
    t = _check_t(bundle, t)
    gm = bundle.gamma
    return t**gm * h_eval(bundle, t) ** (1 - gm)


def loglog_limits(a, d, alpha):
    """Exponents ``b = 1/(d + (a+1) alpha)`` and ``c = 1 - (d+alpha) b``.

    ``a`` is the loglog exponent of ``g``. Pass :data:`INFINITE` for
    ``a = inf``, which gives ``(0, 1)``.
    """
    if a is INFINITE:
        return 0.0, 1.0
    a = float(a)
    if not a >= 0 or math.isinf(a):
        raise DomainError("a must be a finite nonnegative number or INFINITE")
    b = 1.0 / (d + (a + 1) * alpha)
    return b, 1.0 - (d + alpha) * b


def family_loglog_exponent(law):
    """``lim log g(x) / log x`` for the built-in families."""
    if law.family in ("atom", "power"):
        return 0.0
    if law.family == "exponential":
        return law.param("gamma")
    return INFINITE


def _normalizer(bundle, B):
    ratio = bundle.d / bundle.alpha

    def normalizer(x):
        x = float(x)
        return x**ratio / g_eval(bundle, B / x)

    return normalizer


def tauber_lower(bundle, A1, B1):
    """Lower Tauberian conclusion for ``B1 > A1 > 0``.

    If ``log L(t) >= -A1 t^gamma h^(1-gamma)`` eventually, then
    ``liminf_{x -> 0} normalizer(x) log rho(x) >= constant``.

    Returns
    -------
    (float, callable)
        ``-A1 B1**(d/alpha)`` and ``x -> x**(d/alpha) / g(B1/x)``.
    """
    if not (A1 > 0 and B1 > A1):
        raise DomainError(f"need B1 > A1 > 0, got A1={A1}, B1={B1}")
    return -A1 * B1 ** (bundle.d / bundle.alpha), _normalizer(bundle, B1)


def tauber_upper(bundle, A2, B2):
    """Upper Tauberian conclusion for ``0 < B2 < A2``.

    Returns
    -------
    (float, callable)
        ``-(A2 - B2) B2**(d/alpha)`` and ``x -> x**(d/alpha) / g(B2/x)``.
    """
    if not (0 < B2 < A2):
        raise DomainError(f"need 0 < B2 < A2, got A2={A2}, B2={B2}")
    return -(A2 - B2) * B2 ** (bundle.d / bundle.alpha), _normalizer(bundle, B2)


def tauber_substitution(bundle, t, B):
    """Change of variables linking the two sides of the Tauberian theorem.

    Returns ``(x, lhs, rhs)`` with ``x = B t^(gamma-1) h^(1-gamma)``,
    ``lhs = t^gamma h^(1-gamma)`` and
    ``rhs = B^(d/alpha) x^(-d/alpha) g(B/x)``; ``lhs == rhs`` identically.
    """
    t = _check_t(bundle, t)
    if not B > 0:
        raise DomainError("B must be positive")
    gm = bundle.gamma
    h = h_eval(bundle, t)
    lhs = t**gm * h ** (1 - gm)
    x = B * lhs / t
    ratio = bundle.d / bundle.alpha
    rhs = (B / x) ** ratio * g_eval(bundle, B / x)
    return x, lhs, rhs
