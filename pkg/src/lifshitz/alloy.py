"""Alloy-type random potentials ``V(x) = sum_i q_i W(x - i)``.

Provides single-site profiles ``W``, the lattice laws of the couplings
``q_i``, reproducible configuration sampling, periodization on a torus,
truncation at ``D0 / M**alpha`` and the structural constant ``D0``.
"""
from __future__ import annotations

import math
import struct
from dataclasses import dataclass, field, replace

import numpy as np

from ._textform import format_form, parse_form
from .bernstein import BernsteinSpec, sphere_area
from .errors import ConfigurationError, DomainError

__all__ = [
    "SingleSite",
    "box",
    "bump",
    "truncated_power",
    "parse_site",
    "LatticeLaw",
    "atom",
    "power",
    "exponential",
    "double_exponential",
    "parse_law",
    "cdf_eval",
    "Configuration",
    "sample_config",
    "mix64",
    "periodized_potential",
    "compute_D0",
    "d0_admissible",
    "truncate_config",
    "in_A_delta",
    "exceedance_count",
    "SECOND_UNIT_TORUS_EIGENVALUE",
]

# smallest nonzero eigenvalue of -Laplacian on the unit torus, |2 pi|^2
SECOND_UNIT_TORUS_EIGENVALUE = 4 * math.pi**2
_MASK64 = (1 << 64) - 1


# ---------------------------------------------------------------- profiles

@dataclass(frozen=True)
class SingleSite:
    """Nonnegative compactly supported profile ``W`` on R^d.

    Attributes
    ----------
    profile : str
        ``box``, ``bump`` or ``truncpower``.
    d : int
        Dimension.
    params : tuple of (str, float)
        Profile parameters.
    M0 : int
        Integer support radius, ``supp W`` lies in ``[-M0, M0]^d``.
    norm1, norm2sq : float
        Closed-form ``||W||_1`` and ``||W||_2^2``.
    """

    profile: str
    d: int
    params: tuple
    M0: int
    norm1: float
    norm2sq: float

    def param(self, name):
        return dict(self.params)[name]

    @property
    def radius(self):
        """Half-width of the support in the sup norm (or Euclidean radius)."""
        p = dict(self.params)
        return {"box": p.get("h"), "bump": p.get("w"), "truncpower": p.get("radius")}[self.profile]

    def __call__(self, x, cell=None):
        """Evaluate ``W`` at points ``x`` of shape ``(..., d)``.

        ``cell`` is the grid spacing. When given, a singular value at the
        origin is replaced by the average of ``W`` over the ball of radius
        ``cell/2``.
        """
        x = np.asarray(x, dtype=float)
        if x.shape[-1] != self.d:
            raise ValueError(f"points must have {self.d} coordinates")
        p = dict(self.params)
        if self.profile == "box":
            h = p["h"]
            return np.all((x >= -h) & (x < h), axis=-1).astype(float)
        if self.profile == "bump":
            w, height = p["w"], p["height"]
            inside = np.all(np.abs(x) <= w, axis=-1)
            return height * inside * np.prod(np.cos(np.pi * x / (2 * w)) ** 2, axis=-1)
        beta, r = p["beta"], p["radius"]
        rad = np.sqrt(np.sum(x**2, axis=-1))
        with np.errstate(divide="ignore"):
            out = np.where(rad < r, rad ** (-beta), 0.0)
        at0 = rad == 0
        if np.any(at0):
            if cell is None:
                raise DomainError("truncated power profile is singular at the origin")
            rho = min(cell / 2, r)
            out = np.where(at0, self.d / (self.d - beta) * rho ** (-beta), out)
        return out

    def to_text(self):
        return format_form(self.profile, list(self.params) + [("d", self.d)])


def box(h=0.5, d=1):
    """Indicator of the half-open cube ``[-h, h)^d``."""
    h = float(h)
    if not h > 0:
        raise DomainError("box half-width must be positive")
    vol = (2 * h) ** d
    return SingleSite("box", int(d), (("h", h),), max(1, math.ceil(h)), vol, vol)


def bump(w=0.5, height=1.0, d=1):
    """``height * prod_j cos^2(pi x_j / (2w))`` on ``[-w, w]^d``."""
    w, height = float(w), float(height)
    if not (w > 0 and height > 0):
        raise DomainError("bump half-width and height must be positive")
    return SingleSite("bump", int(d), (("w", w), ("height", height)), max(1, math.ceil(w)),
                      height * w**d, height**2 * (0.75 * w) ** d)


def truncated_power(beta, radius=1.0, d=1, alpha=2.0):
    """``|y|^-beta`` on the open ball of given radius.

    Requires ``0 <= beta < min(alpha, d/2)`` where ``alpha`` is the
    low-frequency order of the kinetic term.
    """
    beta, radius = float(beta), float(radius)
    if not radius > 0:
        raise DomainError("radius must be positive")
    if not 0 <= beta < min(alpha, d / 2):
        raise DomainError(f"need 0 <= beta < min(alpha, d/2) = {min(alpha, d / 2)}, got {beta}")
    om = sphere_area(d)
    n1 = om * radius ** (d - beta) / (d - beta)
    n2 = om * radius ** (d - 2 * beta) / (d - 2 * beta)
    return SingleSite("truncpower", int(d), (("beta", beta), ("radius", radius)),
                      max(1, math.ceil(radius)), n1, n2)


def parse_site(text, d=None, alpha=2.0):
    """Parse ``box(h=0.5)``, ``bump(w=0.5,height=1.0)`` or ``truncpower(beta=..,radius=..)``.

    A ``d=`` key in the text takes precedence over the ``d`` argument.
    """
    name, kw = parse_form(text)
    kw.setdefault("d", d if d is not None else 1)
    if name == "box":
        return box(**kw)
    if name == "bump":
        return bump(**kw)
    if name == "truncpower":
        kw.setdefault("alpha", alpha)
        return truncated_power(**kw)
    raise ValueError(f"unknown single-site profile {name!r}")


# -------------------------------------------------------------------- laws

@dataclass(frozen=True)
class LatticeLaw:
    """Distribution of the nonnegative couplings ``q_i``.

    Families and closed forms:

    * ``atom(p0, slope, top=1)``: ``F = min(1, p0 + slope*k)`` for
      ``k < top`` and ``F = 1`` from ``top`` on; an atom of mass ``p0`` at 0.
    * ``power(gamma, cap=1)``: ``F = (k/cap)**gamma`` on ``[0, cap]``.
    * ``exponential(gamma)``: ``F = exp(-k**-gamma)``.
    * ``doubleexp()``: ``F = exp(1 - exp(1/k))``.

    ``kappa0`` is a point up to which ``F`` is continuous on ``(0, kappa0]``;
    ``inf`` when ``F`` is continuous everywhere and never reaches 1.
    """

    family: str
    params: tuple = ()

    def param(self, name):
        return dict(self.params)[name]

    @property
    def kappa0(self):
        p = dict(self.params)
        if self.family == "atom":
            top, p0, slope = p["top"], p["p0"], p["slope"]
            if p0 + slope * top >= 1:
                return (1 - p0) / slope if slope > 0 else top
            return top / 2
        if self.family == "power":
            return p["cap"]
        return math.inf

    def log_cdf(self, kappa):
        """``log F(kappa)``, accurate where ``F`` underflows."""
        k = np.asarray(kappa, dtype=float)
        p = dict(self.params)
        with np.errstate(divide="ignore", over="ignore"):
            if self.family == "atom":
                return np.log(self.cdf(k))
            if self.family == "power":
                g, cap = p["gamma"], p["cap"]
                return np.where(k >= cap, 0.0, g * (np.log(k) - math.log(cap)))
            if self.family == "exponential":
                return np.where(k > 0, -(k ** -p["gamma"]), -np.inf)
            # doubleexp: 1 - exp(1/k) = -expm1(1/k)
            return np.where(k > 0, -np.expm1(1.0 / k), -np.inf)

    def log_neg_log_cdf(self, kappa):
        """``log(-log F(kappa))`` for a scalar ``kappa > 0``, finite where ``F`` underflows."""
        k = float(kappa)
        p = dict(self.params)
        if self.family == "exponential":
            return -p["gamma"] * math.log(k)
        if self.family == "doubleexp":
            # log(expm1(1/k)) = 1/k + log(1 - exp(-1/k))
            return 1 / k + math.log(-math.expm1(-1 / k))
        neg = -float(self.log_cdf(k))
        return math.log(neg) if neg > 0 else -math.inf

    def cdf(self, kappa):
        k = np.asarray(kappa, dtype=float)
        if self.family == "atom":
            p = dict(self.params)
            val = np.minimum(1.0, p["p0"] + p["slope"] * k)
            return np.where(k >= p["top"], 1.0, np.where(k < 0, 0.0, val))
        with np.errstate(under="ignore"):
            return np.where(k < 0, 0.0, np.exp(self.log_cdf(np.maximum(k, 0))))

    def quantile(self, u):
        """Generalized inverse ``inf{k : F(k) >= u}`` for ``u`` in (0, 1)."""
        u = np.asarray(u, dtype=float)
        p = dict(self.params)
        if self.family == "atom":
            p0, slope, top = p["p0"], p["slope"], p["top"]
            if slope > 0:
                cont = np.minimum((u - p0) / slope, top)
            else:
                cont = np.full_like(u, top)
            return np.where(u <= p0, 0.0, cont)
        if self.family == "power":
            return p["cap"] * u ** (1.0 / p["gamma"])
        if self.family == "exponential":
            return (-np.log(u)) ** (-1.0 / p["gamma"])
        return 1.0 / np.log1p(-np.log(u))

    def to_text(self):
        p = dict(self.params)
        if self.family == "atom" and p["top"] == 1.0:
            return format_form("atom", [("p0", p["p0"]), ("slope", p["slope"])])
        if self.family == "power" and p["cap"] == 1.0:
            return format_form("power", [("gamma", p["gamma"])])
        return format_form(self.family, self.params)

    def __str__(self):
        return self.to_text()


def atom(p0, slope, top=1.0, *, allow_degenerate=False):
    """Point mass ``p0`` at zero plus uniform density ``slope`` on ``(0, top)``.

    Any mass left over at ``top`` sits there as a second atom.
    """
    p0, slope, top = float(p0), float(slope), float(top)
    if not (0 <= p0 <= 1 and slope >= 0 and top > 0):
        raise DomainError("atom law needs 0 <= p0 <= 1, slope >= 0, top > 0")
    if not allow_degenerate:
        if p0 >= 1:
            raise DomainError("atom law with p0 = 1 is degenerate (q = 0 almost surely)")
        if p0 == 0 and slope == 0:
            raise DomainError("atom law with p0 = slope = 0 is degenerate (q = top almost surely)")
    return LatticeLaw("atom", (("p0", p0), ("slope", slope), ("top", top)))


def power(gamma, cap=1.0):
    """``F(k) = (k/cap)**gamma`` on ``[0, cap]``."""
    gamma, cap = float(gamma), float(cap)
    if not (gamma > 0 and cap > 0):
        raise DomainError("power law needs gamma > 0 and cap > 0")
    return LatticeLaw("power", (("gamma", gamma), ("cap", cap)))


def exponential(gamma):
    """``F(k) = exp(-k**-gamma)``."""
    gamma = float(gamma)
    if not gamma > 0:
        raise DomainError("exponential law needs gamma > 0")
    return LatticeLaw("exponential", (("gamma", gamma),))


def double_exponential():
    """``F(k) = exp(1 - exp(1/k))``."""
    return LatticeLaw("doubleexp", ())


_LAWS = {"atom": atom, "power": power, "exponential": exponential, "doubleexp": double_exponential}


def parse_law(text):
    """Parse ``exponential(gamma=1.0)``, ``atom(p0=0.3,slope=0.7)``, ``power(gamma=1.0)``, ``doubleexp()``."""
    name, kw = parse_form(text)
    if name not in _LAWS:
        raise ValueError(f"unknown lattice law {name!r}")
    try:
        return _LAWS[name](**kw)
    except TypeError as exc:
        raise ValueError(f"bad arguments for {name}: {exc}") from None


def cdf_eval(law, kappa):
    """``F_q(kappa)`` for ``kappa >= 0``."""
    kappa = float(kappa)
    if kappa < 0:
        raise DomainError("kappa must be nonnegative")
    return float(law.cdf(kappa))


# ----------------------------------------------------------- configurations

def mix64(master, index):
    """SplitMix64 finalizer of ``master + (index+1) * golden``; derives per-sample seeds."""
    z = (int(master) + (int(index) + 1) * 0x9E3779B97F4A7C15) & _MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return z ^ (z >> 31)


@dataclass(frozen=True)
class Configuration:
    """Couplings ``q_i`` on the sites ``[0, M)^d``, stored as an ``(M,)*d`` array."""

    M: int
    d: int
    values: np.ndarray = field(repr=False)
    seed: int
    law: LatticeLaw
    threshold: float | None = None

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        if v.shape != (self.M,) * self.d:
            v = v.reshape((self.M,) * self.d)
        if np.any(v < 0):
            raise DomainError("couplings must be nonnegative")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    def to_bytes(self):
        """uint64 seed, then int64 ``(d, M, 1, M)`` header, then float64 values (all LE)."""
        head = struct.pack("<Q4q", self.seed & _MASK64, self.d, self.M, 1, self.M)
        return head + self.values.astype("<f8").tobytes(order="C")

    @classmethod
    def from_bytes(cls, data, law):
        seed, d, M, n, N = struct.unpack_from("<Q4q", data)
        if n != 1 or N != M:
            raise ValueError("configuration payload must have n = 1")
        vals = np.frombuffer(data, dtype="<f8", offset=struct.calcsize("<Q4q"))
        return cls(M, d, vals.reshape((M,) * d), seed, law)


def sample_config(law, M, d, seed):
    """Draw ``M**d`` i.i.d. couplings by inverse-CDF sampling.

    A Philox counter generator keyed by ``seed`` supplies uniforms. The
    ``k``-th uniform goes to the ``k``-th site in row-major order, so the
    result depends only on ``(law, M, d, seed)``.
    """
    M, d = int(M), int(d)
    if M < 1 or d < 1:
        raise DomainError("M and d must be positive")
    seed = int(seed)
    if not 0 <= seed <= _MASK64:
        raise DomainError("seed must be a 64-bit unsigned integer")
    gen = np.random.Generator(np.random.Philox(key=seed))
    # shift off zero so every uniform lies strictly inside (0, 1)
    u = gen.random(M**d) + 2.0**-54
    return Configuration(M, d, law.quantile(u).reshape((M,) * d), seed, law)


def _check_grid(config, grid):
    if grid.M != config.M or grid.d != config.d:
        raise ValueError(f"grid (M={grid.M}, d={grid.d}) does not match configuration "
                         f"(M={config.M}, d={config.d})")


def periodized_potential(config, site, grid):
    """Periodized alloy potential sampled at the grid nodes.

    ``V(x) = sum_{i in Z^d} q_{i mod M} W(x - i)``. Every node is
    ``i*n + r`` with site ``i`` and sub-cell offset ``r``. For each integer
    shift ``m`` with ``W(m + r/n)`` possibly nonzero, the rolled couplings
    are multiplied into the field, so the sum is exact (no quadrature).
    """
    _check_grid(config, grid)
    if site.d != config.d:
        raise ValueError("single-site profile dimension does not match configuration")
    M, d, n = grid.M, grid.d, grid.n
    frac = np.stack(np.meshgrid(*([np.arange(n) / n] * d), indexing="ij"), axis=-1)
    V = np.zeros((M,) * d + (n,) * d)
    q = config.values
    R = site.M0
    for m in np.ndindex(*([2 * R + 2] * d)):
        shift = np.array(m) - R - 1
        Wm = site(frac + shift, cell=grid.spacing)
        if not np.any(Wm):
            continue
        qs = np.roll(q, tuple(shift), axis=tuple(range(d)))
        V += qs.reshape(qs.shape + (1,) * d) * Wm
    # (M..., n...) -> interleave to (M, n, M, n, ...) -> (N,)*d
    order = [ax for pair in zip(range(d), range(d, 2 * d)) for ax in pair]
    return V.transpose(order).reshape(grid.shape)


def d0_admissible(site, phi, D0):
    """Margin of ``||W||_1 > D0 (2M0)^d ||W||_2^2 / (C1 mu^(alpha/2) - D0 ||W||_1) > 0``.

    Returns the middle quantity divided by ``||W||_1`` (admissible iff it
    lies in ``(0, 1)``), or ``inf`` if the denominator is not positive.
    """
    gap = phi.c1 * SECOND_UNIT_TORUS_EIGENVALUE ** (phi.alpha / 2) - D0 * site.norm1
    if gap <= 0:
        return math.inf
    return D0 * (2 * site.M0) ** site.d * site.norm2sq / gap / site.norm1


def compute_D0(site, phi):
    """Structural constant of the lower bound.

    ``D0 = C1 mu^(alpha/2) ||W||_1 / (2 (||W||_1^2 + (2 M0)^d ||W||_2^2))`` with
    ``mu = 4 pi^2``.

    Raises
    ------
    ConfigurationError
        If the admissibility condition fails (not expected for this ``D0``).
    """
    if not isinstance(phi, BernsteinSpec):
        raise TypeError("phi must be a BernsteinSpec")
    n1, n2 = site.norm1, site.norm2sq
    D0 = 0.5 * phi.c1 * SECOND_UNIT_TORUS_EIGENVALUE ** (phi.alpha / 2) * n1 / (
        n1**2 + (2 * site.M0) ** site.d * n2)
    ratio = d0_admissible(site, phi, D0)
    if not 0 < ratio < 1:
        raise ConfigurationError(f"D0 = {D0} violates the admissibility condition (ratio {ratio})")
    return D0


def truncate_config(config, D0, alpha):
    """Couplings capped at ``D0 / M**alpha``."""
    if not D0 > 0:
        raise DomainError("D0 must be positive")
    tau = D0 / config.M**alpha
    return replace(config, values=np.minimum(config.values, tau), threshold=tau)


def exceedance_count(config, D0, alpha):
    """Number of sites with ``q_i > D0 / M**alpha``."""
    return int(np.count_nonzero(config.values > D0 / config.M**alpha))


def in_A_delta(config, delta, D0, alpha):
    """Whether at least ``delta * M**d`` couplings exceed ``D0 / M**alpha``."""
    if not 0 < delta < 1:
        raise DomainError("delta must lie in (0, 1)")
    return exceedance_count(config, D0, alpha) >= delta * config.M**config.d
