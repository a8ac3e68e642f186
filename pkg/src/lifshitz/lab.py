"""Monte-Carlo estimation of the IDS and its Laplace transform on tori.

Each ensemble member is a periodized alloy potential on a torus of side
``M``. Its lowest eigenvalues give a certified partial heat trace and a
partial eigenvalue count. Means over members estimate

* ``L(t)``: ``M^-d E[tr exp(-t H_M)]``, which dominates the
  infinite-volume Laplace transform. Tables label it a torus proxy.
* ``l(lambda)``: ``M^-d E[#{k : lambda_k <= lambda}]``.

Everything is a deterministic function of the configuration and its
master seed. Member ``i`` uses seed ``mix64(master, i)``, and reductions
run in sample order with compensated summation. Thread count does not
change a single bit.
"""
from __future__ import annotations

import csv
import hashlib
import io
import json
import math
import os
import platform
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np
import scipy
from scipy import integrate, optimize, stats
from scipy.special import logsumexp

from . import __version__
from .alloy import (LatticeLaw, SingleSite, compute_D0, mix64, parse_law, parse_site,
                    periodized_potential, sample_config)
from .bernstein import BernsteinSpec, parse_bernstein
from .errors import NumericError
from .lanczos import block_lanczos
from .rates import RateBundle, rate_denominator, tauber_lower, tauber_upper, x_t
from .torus import SchrodingerOperator, SpectralOperator, TorusGrid

__all__ = [
    "ExperimentConfig",
    "EnsembleResult",
    "Table",
    "default_workers",
    "run_ensemble",
    "estimate_laplace",
    "estimate_ids",
    "choose_M_of_t",
    "fit_lifshitz_exponent",
    "synthetic_log_density",
    "laplace_transform",
    "verify_tauberian_numeric",
    "TauberReport",
    "scaling_study",
    "bundle_for",
]

WORKERS_ENV = "LIFSHITZ_WORKERS"
TORUS_PROXY_NOTE = "torus-proxy estimate (periodized trace; upper-bound object for L(t))"


def default_workers():
    """Worker count from ``$LIFSHITZ_WORKERS``, else 1."""
    try:
        return max(1, int(os.environ.get(WORKERS_ENV, "1")))
    except ValueError:
        return 1


def _floats(text):
    return tuple(float(v) for v in str(text).replace(" ", "").split(",") if v)


def _ints(text):
    return tuple(int(v) for v in str(text).replace(" ", "").split(",") if v)


@dataclass(frozen=True)
class ExperimentConfig:
    """Everything needed to regenerate an ensemble.

    Attributes
    ----------
    phi : BernsteinSpec
        Kinetic symbol.
    site : SingleSite
        Single-site profile, of dimension ``d``.
    law : LatticeLaw
        Coupling distribution.
    d : int
        Dimension.
    M_list : tuple of int
        Torus sides.
    n : int
        Grid nodes per unit length.
    K : int or None
        Initial eigenvalue count, default ``min(64, N^d)``.
    K_cap : int
        Upper limit of the automatic K escalation.
    t_grid, lam_grid : tuple of float
        Strictly increasing positive grids.
    samples : int
        Ensemble size.
    seed : int
        Master seed.
    tol : float
        Eigenpair residual tolerance.
    trace_tol : float
        A trace cell is certified when remainder <= trace_tol * leading.
    out : str or None
        Output directory.
    """

    phi: BernsteinSpec
    site: SingleSite
    law: LatticeLaw
    d: int = 1
    M_list: tuple = (4,)
    n: int = 8
    K: int | None = None
    K_cap: int = 1024
    t_grid: tuple = (1.0,)
    lam_grid: tuple = ()
    samples: int = 16
    seed: int = 0
    tol: float = 1e-8
    trace_tol: float = 1e-8
    out: str | None = None

    def __post_init__(self):
        object.__setattr__(self, "M_list", tuple(int(m) for m in self.M_list))
        object.__setattr__(self, "t_grid", tuple(float(t) for t in self.t_grid))
        object.__setattr__(self, "lam_grid", tuple(float(x) for x in self.lam_grid))
        for name in ("t_grid", "lam_grid", "M_list"):
            g = np.asarray(getattr(self, name), dtype=float)
            if np.any(g <= 0) or np.any(np.diff(g) <= 0):
                raise ValueError(f"{name} must be strictly increasing and positive")
        if not self.M_list:
            raise ValueError("M_list must be nonempty")
        if self.samples < 1:
            raise ValueError("samples must be >= 1")
        if self.site.d != self.d:
            raise ValueError(f"site dimension {self.site.d} does not match d={self.d}")
        if not (self.tol > 0 and self.trace_tol > 0):
            raise ValueError("tolerances must be positive")

    def initial_K(self, M):
        size = (self.n * M) ** self.d
        return min(self.K or 64, size)

    def to_text(self):
        """``key = value`` lines using the canonical text forms."""
        lines = [
            f"phi = {self.phi.to_text()}",
            f"site = {self.site.to_text()}",
            f"law = {self.law.to_text()}",
            f"d = {self.d}",
            f"M = {','.join(str(m) for m in self.M_list)}",
            f"n = {self.n}",
            f"K = {self.K if self.K is not None else 'auto'}",
            f"K_cap = {self.K_cap}",
            f"t = {','.join(repr(t) for t in self.t_grid)}",
            f"lambda = {','.join(repr(x) for x in self.lam_grid)}",
            f"samples = {self.samples}",
            f"seed = {self.seed}",
            f"tol = {self.tol!r}",
            f"trace_tol = {self.trace_tol!r}",
        ]
        if self.out is not None:
            lines.append(f"out = {self.out}")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_mapping(cls, kv):
        """Build from string values keyed as in :meth:`to_text`."""
        kv = dict(kv)
        d = int(kv.pop("d", 1))
        phi = parse_bernstein(kv.pop("phi"))
        site = parse_site(kv.pop("site"), d=d, alpha=phi.alpha)
        law = parse_law(kv.pop("law"))
        args = dict(phi=phi, site=site, law=law, d=d)
        conv = {
            "M": ("M_list", _ints), "n": ("n", int), "K_cap": ("K_cap", int),
            "t": ("t_grid", _floats), "lambda": ("lam_grid", _floats),
            "samples": ("samples", int), "seed": ("seed", int), "tol": ("tol", float),
            "trace_tol": ("trace_tol", float), "out": ("out", str),
        }
        K = kv.pop("K", "auto")
        args["K"] = None if str(K) in ("auto", "None") else int(K)
        for key, raw in kv.items():
            if key not in conv:
                raise ValueError(f"unknown configuration key {key!r}")
            name, fn = conv[key]
            args[name] = fn(raw)
        return cls(**args)

    @classmethod
    def from_text(cls, text):
        kv = {}
        for ln, line in enumerate(text.splitlines(), 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"line {ln}: expected key = value")
            key, _, val = line.partition("=")
            kv[key.strip()] = val.strip()
        return cls.from_mapping(kv)

    def digest(self):
        return hashlib.sha256(self.to_text().encode()).hexdigest()


@dataclass
class Table:
    """Column-oriented table written as CSV with ``%.17g`` floats."""

    columns: list
    rows: list = field(default_factory=list)
    note: str = ""

    def column(self, name):
        i = self.columns.index(name)
        return np.array([r[i] for r in self.rows])

    def to_csv(self):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self.columns)
        for r in self.rows:
            w.writerow(_fmt_cell(v) for v in r)
        return buf.getvalue()

    def write(self, path):
        Path(path).write_text(self.to_csv())


def _fmt_cell(v):
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return "%.17g" % float(v)
    return str(v)


@dataclass
class EnsembleResult:
    """Eigenvalues of every ensemble member, grouped by torus side.

    ``eigenvalues[M][i]`` is the ascending array for sample ``i``;
    ``residuals[M][i]`` the largest certified residual;
    ``metadata`` records seeds, config digest and wall time.
    """

    config: ExperimentConfig
    eigenvalues: dict
    residuals: dict
    K_used: dict
    metadata: dict


def bundle_for(config):
    """Rate bundle of a configuration, with ``D0`` from its profile and symbol."""
    return RateBundle(config.d, config.phi.alpha, compute_D0(config.site, config.phi), config.law)


def _needs_more(eigs, size, t_grid, lam_grid, trace_tol):
    K = eigs.size
    if K >= size:
        return False
    for t in t_grid:
        log_lead = logsumexp(-t * eigs)
        log_rem = math.log(size - K) - t * eigs[-1]
        if log_rem > math.log(trace_tol) + log_lead:
            return True
    return bool(lam_grid) and max(lam_grid) >= eigs[-1]


def _solve_member(config, M, index, t_grid, lam_grid):
    seed = mix64(config.seed, index)
    grid = TorusGrid(M, config.d, config.n)
    q = sample_config(config.law, M, config.d, seed)
    V = periodized_potential(q, config.site, grid)
    op = SchrodingerOperator(SpectralOperator(grid, config.phi), V)
    K = config.initial_K(M)
    cap = min(config.K_cap, grid.size)
    while True:
        res = block_lanczos(op.apply_block, grid.size, K, tol=config.tol, seed=seed,
                            max_applications=max(5000, 40 * K))
        eigs = res.values
        if K >= cap or not _needs_more(eigs, grid.size, t_grid, lam_grid, config.trace_tol):
            return eigs, float(res.residuals.max()), K
        K = min(2 * K, cap)


def run_ensemble(config, M_list=None, t_grid=None, lam_grid=None, workers=None):
    """Solve every ensemble member for every ``M``.

    ``K`` starts at ``config.initial_K(M)`` and doubles (up to ``K_cap``)
    until the trace remainder on ``t_grid`` is within ``trace_tol`` and the
    ``K``-th eigenvalue exceeds ``max(lam_grid)``.
    """
    t0 = time.perf_counter()
    M_list = config.M_list if M_list is None else tuple(M_list)
    t_grid = config.t_grid if t_grid is None else tuple(t_grid)
    lam_grid = config.lam_grid if lam_grid is None else tuple(lam_grid)
    workers = workers or default_workers()
    eig, resid, kused = {}, {}, {}
    with ThreadPoolExecutor(max_workers=workers) as pool:
        for M in M_list:
            out = list(pool.map(lambda i, M=M: _solve_member(config, M, i, t_grid, lam_grid),
                                range(config.samples)))
            eig[M] = [o[0] for o in out]
            resid[M] = [o[1] for o in out]
            kused[M] = [o[2] for o in out]
    meta = {
        "config_sha256": config.digest(),
        "master_seed": config.seed,
        "sample_seeds": "mix64(master, i), i = 0..samples-1",
        "wall_time_s": time.perf_counter() - t0,
        "workers": workers,
    }
    return EnsembleResult(config, eig, resid, kused, meta)


def _mean_stderr_log(logs):
    """Mean and standard error of ``exp(logs)``, computed with a common scale."""
    logs = np.asarray(logs, dtype=float)
    S = logs.size
    m = float(logs.max())
    vals = np.exp(logs - m)
    mean = math.fsum(vals) / S
    if S > 1:
        var = math.fsum((vals - mean) ** 2) / (S - 1)
        se = math.sqrt(var / S)
    else:
        se = math.nan
    log_mean = m + math.log(mean)
    return log_mean, se * math.exp(m) if se == se else se, se / mean if mean > 0 else math.nan


def estimate_laplace(config, result=None, workers=None):
    """Table of ``L_hat_M(t)`` with standard errors over ``(M, t)``.

    Columns: ``M, t, L_hat, log_L_hat, stderr, rel_stderr, max_remainder_ratio,
    K_max, flagged``. A cell is flagged when some member's trace remainder
    exceeds ``trace_tol`` times its leading sum even at ``K_cap``.
    """
    if result is None:
        result = run_ensemble(config, lam_grid=(), workers=workers)
    table = Table(["M", "t", "L_hat", "log_L_hat", "stderr", "rel_stderr",
                   "max_remainder_ratio", "K_max", "flagged"], note=TORUS_PROXY_NOTE)
    d = config.d
    for M in sorted(result.eigenvalues):
        eig_list = result.eigenvalues[M]
        size = (config.n * M) ** d
        for t in config.t_grid:
            logs, ratios = [], []
            for eigs in eig_list:
                lead = logsumexp(-t * eigs)
                logs.append(lead - d * math.log(M))
                K = eigs.size
                ratio = 0.0 if K >= size else math.exp(math.log(size - K) - t * eigs[-1] - lead)
                ratios.append(ratio)
            log_mean, se, rel = _mean_stderr_log(logs)
            worst = max(ratios)
            table.rows.append([M, t, math.exp(log_mean), log_mean, se, rel, worst,
                               max(result.K_used[M]), worst > config.trace_tol])
    return table


def estimate_ids(config, result=None, workers=None):
    """Table of ``l_hat_M(lambda)`` with standard errors over ``(M, lambda)``.

    Columns: ``M, lambda, ell_hat, stderr, flagged``. A cell is flagged when
    ``lambda`` is not below the largest computed eigenvalue of every member,
    since the count could then be incomplete.
    """
    if not config.lam_grid:
        raise ValueError("configuration has an empty lambda grid")
    if result is None:
        result = run_ensemble(config, t_grid=(), workers=workers)
    table = Table(["M", "lambda", "ell_hat", "stderr", "flagged"], note=TORUS_PROXY_NOTE)
    d = config.d
    for M in sorted(result.eigenvalues):
        eig_list = result.eigenvalues[M]
        size = (config.n * M) ** d
        for lam in config.lam_grid:
            counts = np.array([np.searchsorted(e, lam, side="right") for e in eig_list], float)
            vals = counts / M**d
            S = vals.size
            mean = math.fsum(vals) / S
            se = math.sqrt(math.fsum((vals - mean) ** 2) / (S - 1) / S) if S > 1 else math.nan
            flagged = any(e.size < size and lam >= e[-1] for e in eig_list)
            table.rows.append([M, lam, mean, se, flagged])
    return table


def choose_M_of_t(bundle, t, kind="upper"):
    """Torus side matched to ``t``: ``floor(x_t) + 1`` (upper) or ``floor(x_t)`` (lower)."""
    x = x_t(bundle, t)
    if kind == "upper":
        return math.floor(x) + 1
    if kind == "lower":
        return max(1, math.floor(x))
    raise ValueError("kind must be 'upper' or 'lower'")


def fit_lifshitz_exponent(lam, ell):
    """Least-squares slope of ``log|log ell|`` against ``log lam``.

    Returns
    -------
    (float, float)
        Slope and its standard error.

    Raises
    ------
    ValueError
        With fewer than 5 points or any ``ell`` outside (0, 1).
    """
    lam = np.asarray(lam, dtype=float)
    ell = np.asarray(ell, dtype=float)
    if lam.size != ell.size or lam.size < 5:
        raise ValueError("need at least 5 (lambda, ell) pairs")
    if np.any(lam <= 0) or np.any(ell <= 0) or np.any(ell >= 1):
        raise ValueError("need lambda > 0 and 0 < ell < 1 on the whole window")
    fit = stats.linregress(np.log(lam), np.log(-np.log(ell)))
    return float(fit.slope), float(fit.stderr)


def synthetic_log_density(bundle, scale=1.0):
    """``x -> -scale * x**(-d/alpha) * g(1/x)``, the log of a distribution
    function with the tail shape the Tauberian theorem is about."""
    r = bundle.d / bundle.alpha

    def log_rho(x):
        return -scale * x ** (-r) * bundle.g(1.0 / x)

    return log_rho


# beyond |log x| = 700 the integrand (carrying exp(-t x) and the Jacobian x) is 0 in double
LOG_X_MAX = 700.0


def laplace_transform(log_rho, t):
    """``log L(t)`` for ``L(t) = int exp(-t x) d rho(x) = t int exp(-t x) rho(x) dx``.

    The integrand is centred on its peak and integrated in ``log x`` so that
    values far below the float range are handled in the log domain.
    """
    t = float(t)

    def phi(u):
        if abs(u) > LOG_X_MAX:
            return -math.inf
        x = math.exp(u)
        return -t * x + log_rho(x) + u

    opt = optimize.minimize_scalar(lambda u: -phi(u), bracket=(-math.log(t) - 1, -math.log(t) + 1))
    u0 = float(opt.x)
    peak = phi(u0)
    # width of the peak in log x from a finite-difference curvature
    e = 1e-4
    curv = -(phi(u0 + e) - 2 * peak + phi(u0 - e)) / e**2
    w = 1 / math.sqrt(curv) if curv > 0 else 1.0
    val, err = integrate.quad(lambda v: math.exp(phi(u0 + w * v) - peak), -math.inf, math.inf,
                              epsabs=0, epsrel=1e-10, limit=400)
    val *= w
    if not (val > 0 and err * w <= 1e-6 * val):
        raise NumericError("Laplace transform quadrature failed", t=t, value=val, abserr=err)
    return math.log(t) + peak + math.log(val)


@dataclass
class TauberReport:
    """Outcome of :func:`verify_tauberian_numeric`.

    ``A`` holds the measured ``-log L(t) / rate_denominator(t)``;
    ``A1``/``A2`` are its max/min; ``lower``/``upper`` map each swept ``B``
    to ``(constant, min or max of normalizer*log rho over x_grid, ok)``.
    """

    t_grid: list
    A: list
    A1: float
    A2: float
    lower: dict
    upper: dict

    @property
    def ok(self):
        return all(v[2] for v in self.lower.values()) and all(v[2] for v in self.upper.values())


def verify_tauberian_numeric(bundle, log_rho, t_grid, x_grid, B1_list=None, B2_list=None):
    """Numerically exercise both Tauberian directions on a synthetic measure.

    Parameters
    ----------
    bundle : RateBundle
    log_rho : callable
        Log of the distribution function of the measure near 0.
    t_grid : sequence of float
        Large times where ``L(t)`` is computed.
    x_grid : sequence of float
        Small points where the conclusions are checked.
    B1_list, B2_list : sequence of float, optional
        Values swept in the lower (``B1 > A1``) and upper (``B2 < A2``)
        conclusions. Defaults to multiples of the measured constants.
    """
    A = []
    for t in t_grid:
        A.append(-laplace_transform(log_rho, t) / rate_denominator(bundle, t))
    A1, A2 = max(A), min(A)
    if B1_list is None:
        B1_list = [A1 * f for f in (1.05, 1.25, 1.5, 2.0)]
    if B2_list is None:
        B2_list = [A2 * f for f in (0.25, 0.5, 0.75, 0.95)]
    lower, upper = {}, {}
    for B1 in B1_list:
        const, norm = tauber_lower(bundle, A1, B1)
        vals = [norm(x) * log_rho(x) for x in x_grid]
        lower[B1] = (const, min(vals), min(vals) >= const)
    for B2 in B2_list:
        const, norm = tauber_upper(bundle, A2, B2)
        vals = [norm(x) * log_rho(x) for x in x_grid]
        upper[B2] = (const, max(vals), max(vals) <= const)
    return TauberReport(list(t_grid), A, A1, A2, lower, upper)


def scaling_study(config, bundle=None, workers=None, out=None):
    """Run the rate-shape study and optionally write its tables.

    Per ``t``: ``M(t)`` from :func:`choose_M_of_t`, ``L_hat`` on that torus,
    ``rate_denominator(t)`` and ``log L_hat / rate_denominator(t)``. The
    column ``ratio_sqrt_t`` holds ``log L_hat / sqrt(t)``. Per ``lambda``
    (on each ``M`` of ``config.M_list``): ``ell_hat`` and
    ``normalizer(lambda) * log ell_hat`` with ``B = D0``.

    Writes ``laplace.csv``, ``ids.csv`` (when a lambda grid is set) and
    ``metadata.json`` to ``out`` (or ``config.out``) if given.

    Returns
    -------
    dict
        ``{"laplace": Table, "ids": Table or None, "summary": dict}``.
    """
    bundle = bundle or bundle_for(config)
    out = out if out is not None else config.out
    t_start = time.perf_counter()
    Ms = {t: choose_M_of_t(bundle, t) for t in config.t_grid}
    lap = Table(["t", "M", "L_hat", "log_L_hat", "stderr", "rate_denominator",
                 "ratio", "ratio_sqrt_t", "flagged"], note=TORUS_PROXY_NOTE)
    for M in sorted(set(Ms.values())):
        ts = tuple(t for t in config.t_grid if Ms[t] == M)
        sub = replace(config, M_list=(M,), t_grid=ts, lam_grid=())
        tab = estimate_laplace(sub, workers=workers)
        for row in tab.rows:
            _, t, L, logL, se, _, _, _, flag = row
            den = rate_denominator(bundle, t)
            lap.rows.append([t, M, L, logL, se, den, logL / den, logL / math.sqrt(t), flag])
    lap.rows.sort(key=lambda r: r[0])

    ids = None
    if config.lam_grid:
        ids = Table(["M", "lambda", "ell_hat", "stderr", "normalized_log", "flagged"],
                    note=TORUS_PROXY_NOTE)
        sub = replace(config, t_grid=())
        tab = estimate_ids(sub, workers=workers)
        r = config.d / config.phi.alpha
        for M, lam, ell, se, flag in tab.rows:
            if ell > 0:
                g = bundle.g(bundle.D0 / lam)
                norm_log = lam**r / g * math.log(ell) if g > 0 else math.nan
            else:
                norm_log = -math.inf
            ids.rows.append([M, lam, ell, se, norm_log, flag])

    ratios = np.array([row[6] for row in lap.rows])
    sq = np.array([row[7] for row in lap.rows])
    half = slice(len(ratios) // 2, None)
    summary = {
        "ratio_min_upper_half": float(ratios[half].min()) if ratios.size else math.nan,
        "ratio_max_upper_half": float(ratios[half].max()) if ratios.size else math.nan,
        "ratio_sqrt_t_upper_half": [float(v) for v in sq[half]],
        "flagged_cells": int(sum(bool(r[-1]) for r in lap.rows)
                             + (sum(bool(r[-1]) for r in ids.rows) if ids else 0)),
    }
    if ratios.size >= 2:
        ts = np.log(np.array([row[0] for row in lap.rows]))
        fit = stats.linregress(ts, ratios) if ratios.size > 2 else None
        summary["ratio_slope_vs_log_t"] = float(fit.slope) if fit else float(
            (ratios[-1] - ratios[0]) / (ts[-1] - ts[0]))
    if out is not None:
        path = Path(out)
        path.mkdir(parents=True, exist_ok=True)
        lap.write(path / "laplace.csv")
        if ids is not None:
            ids.write(path / "ids.csv")
        meta = {
            "note": TORUS_PROXY_NOTE,
            "config": config.to_text(),
            "config_sha256": config.digest(),
            "bundle": bundle.to_text(),
            "master_seed": config.seed,
            "sample_seeds": "mix64(master, i), i = 0..samples-1",
            "summary": summary,
            "versions": {"lifshitz": __version__, "numpy": np.__version__,
                         "scipy": scipy.__version__, "python": platform.python_version()},
            "wall_time_s": time.perf_counter() - t_start,
        }
        (path / "metadata.json").write_text(json.dumps(meta, indent=2, default=str) + "\n")
    return {"laplace": lap, "ids": ids, "summary": summary}
