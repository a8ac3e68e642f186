"""Command line interface: ``python -m lifshitz <subcommand> ...``.

Exit codes: 0 success, 1 usage error, 2 numerical failure, 3 some table
cells flagged (partial success).
"""
from __future__ import annotations

import argparse
import math
import sys
from pathlib import Path

import numpy as np

from .alloy import mix64, periodized_potential, sample_config
from .errors import DomainError, NumericError, PreconditionError
from .lab import (ExperimentConfig, bundle_for, choose_M_of_t, estimate_ids, estimate_laplace,
                  scaling_study, synthetic_log_density, verify_tauberian_numeric)
from .rates import h_eval, parse_bundle, rate_denominator, x_t
from .torus import SchrodingerOperator, SpectralOperator, TorusGrid, lowest_eigenvalues

EXIT_OK, EXIT_USAGE, EXIT_NUMERIC, EXIT_FLAGGED = 0, 1, 2, 3

_DEFAULTS = {
    "phi": "drift(b=1.0)",
    "site": "box(h=0.5)",
    "law": "atom(p0=0.36787944117144233,slope=0.6321205588285577)",
    "d": "1",
}

# command-line flag -> configuration key
_FIELDS = {
    "phi": "phi", "site": "site", "law": "law", "d": "d", "M": "M", "n": "n", "K": "K",
    "K_cap": "K_cap", "t": "t", "lam": "lambda", "samples": "samples", "tol": "tol",
    "trace_tol": "trace_tol",
}


def _read_config_file(path):
    kv = {}
    for line in Path(path).read_text().splitlines():
        line = line.split("#", 1)[0].strip()
        if line:
            if "=" not in line:
                raise ValueError(f"{path}: expected key = value, got {line!r}")
            k, _, v = line.partition("=")
            kv[k.strip()] = v.strip()
    return kv


def _config(args):
    kv = dict(_DEFAULTS)
    if args.config:
        kv.update(_read_config_file(args.config))
    for flag, key in _FIELDS.items():
        val = getattr(args, flag, None)
        if val is not None:
            kv[key] = val
    if args.seed is not None:
        kv["seed"] = str(args.seed)
    if args.out is not None:
        kv["out"] = args.out
    return ExperimentConfig.from_mapping(kv)


def _emit(table, args, name):
    text = table.to_csv()
    if args.out:
        path = Path(args.out)
        path.mkdir(parents=True, exist_ok=True)
        (path / name).write_text(text)
    else:
        sys.stdout.write(text)


def _flagged(table):
    return any(bool(r[-1]) for r in table.rows)


def cmd_rates(args):
    if args.bundle:
        bundle = parse_bundle(args.bundle)
    else:
        bundle = bundle_for(_config(args))
    print(f"# {bundle.to_text()}")
    print(f"# gamma={bundle.gamma!r} x0={bundle.x0!r} t0={bundle.t0!r}")
    print("t,x_t,h,rate_denominator,M_upper,M_lower")
    ts = [float(v) for v in (args.t or "10,100,1000").split(",")]
    for t in ts:
        print(",".join("%.17g" % v if isinstance(v, float) else str(v) for v in
                       (t, x_t(bundle, t), h_eval(bundle, t), rate_denominator(bundle, t),
                        choose_M_of_t(bundle, t, "upper"), choose_M_of_t(bundle, t, "lower"))))
    return EXIT_OK


def cmd_spectrum(args):
    cfg = _config(args)
    print("M,sample,k,eigenvalue")
    for M in cfg.M_list:
        grid = TorusGrid(M, cfg.d, cfg.n)
        seed = mix64(cfg.seed, args.sample)
        q = sample_config(cfg.law, M, cfg.d, seed)
        op = SchrodingerOperator(SpectralOperator(grid, cfg.phi), periodized_potential(q, cfg.site, grid))
        eigs = lowest_eigenvalues(op, cfg.initial_K(M), cfg.tol, seed)
        for k, e in enumerate(eigs, 1):
            print(f"{M},{args.sample},{k},{'%.17g' % e}")
    return EXIT_OK


def cmd_laplace(args):
    cfg = _config(args)
    table = estimate_laplace(cfg, workers=args.threads)
    _emit(table, args, "laplace.csv")
    return EXIT_FLAGGED if _flagged(table) else EXIT_OK


def cmd_ids(args):
    cfg = _config(args)
    table = estimate_ids(cfg, workers=args.threads)
    _emit(table, args, "ids.csv")
    return EXIT_FLAGGED if _flagged(table) else EXIT_OK


def cmd_tauber(args):
    bundle = parse_bundle(args.bundle) if args.bundle else bundle_for(_config(args))
    log_rho = synthetic_log_density(bundle, args.scale)
    ts = [float(v) for v in (args.t or "1e4,1e5,1e6").split(",")]
    xs = np.geomspace(1e-4, 1e-2, 9)
    rep = verify_tauberian_numeric(bundle, log_rho, ts, xs)
    print(f"# A1={rep.A1!r} A2={rep.A2!r}")
    print("side,B,constant,measured,ok")
    for B, (c, m, ok) in rep.lower.items():
        print(f"lower,{'%.17g' % B},{'%.17g' % c},{'%.17g' % m},{int(ok)}")
    for B, (c, m, ok) in rep.upper.items():
        print(f"upper,{'%.17g' % B},{'%.17g' % c},{'%.17g' % m},{int(ok)}")
    return EXIT_OK if rep.ok else EXIT_FLAGGED


def cmd_study(args):
    cfg = _config(args)
    res = scaling_study(cfg, workers=args.threads, out=args.out)
    if not args.out:
        sys.stdout.write(res["laplace"].to_csv())
        if res["ids"] is not None:
            sys.stdout.write(res["ids"].to_csv())
    return EXIT_FLAGGED if res["summary"]["flagged_cells"] else EXIT_OK


def cmd_verify(args):
    """Quick self-check of closed-form identities."""
    from .bernstein import drift, heat_kernel_at_zero, moment_integral, stable
    from .bounds import binomial_tail_bound, binomial_upper_tail
    from .torus import gaussian_heat_kernel, kinetic_eigenvalues, torus_heat_kernel

    checks = []
    mu1 = kinetic_eigenvalues(1, drift(), 100, 2)
    checks.append(("eigenvalue scaling", all(
        np.allclose(kinetic_eigenvalues(M, drift(), 100, 2) * M**2, mu1, rtol=1e-12, atol=0)
        for M in (2, 4, 8))))
    checks.append(("gaussian kernel", abs(heat_kernel_at_zero(drift(), 1, 2) * 4 * math.pi - 1) < 1e-8))
    checks.append(("cauchy kernel", abs(heat_kernel_at_zero(stable(1), 1, 1) * math.pi - 1) < 1e-8))
    g = TorusGrid(2, 1)
    checks.append(("image sum", abs(torus_heat_kernel(g, drift(), 1.0, [0.1], [0.7])
                                    / gaussian_heat_kernel(2, 1.0, [0.1], [0.7]) - 1) < 1e-8))
    checks.append(("moment identity", abs(moment_integral(drift(), 0.5, 4.0) - 0.5) < 1e-8))
    checks.append(("chernoff", all(binomial_tail_bound(20, 0.3, gm) >= binomial_upper_tail(20, 0.3, gm * 20)
                                   for gm in (0.4, 0.6, 0.8))))
    for name, ok in checks:
        print(f"{'PASS' if ok else 'FAIL'} {name}")
    return EXIT_OK if all(ok for _, ok in checks) else EXIT_NUMERIC


def build_parser():
    p = argparse.ArgumentParser(prog="lifshitz", description=__doc__.splitlines()[0])
    p.add_argument("--config", help="key = value file with canonical text forms")
    p.add_argument("--seed", type=int, help="master seed")
    p.add_argument("--threads", type=int, help="worker threads (default $LIFSHITZ_WORKERS or 1)")
    p.add_argument("--out", help="output directory")
    sub = p.add_subparsers(dest="command", required=True)

    def fields(sp):
        sp.add_argument("--phi", help="kinetic symbol, e.g. drift(b=1.0)")
        sp.add_argument("--site", help="single-site profile, e.g. box(h=0.5)")
        sp.add_argument("--law", help="coupling law, e.g. exponential(gamma=1.0)")
        sp.add_argument("--d", help="dimension")
        sp.add_argument("--M", help="comma-separated torus sides")
        sp.add_argument("--n", help="grid nodes per unit length")
        sp.add_argument("--K", help="initial eigenvalue count")
        sp.add_argument("--K-cap", dest="K_cap", help="cap for K escalation")
        sp.add_argument("--t", help="comma-separated times")
        sp.add_argument("--lam", help="comma-separated energies")
        sp.add_argument("--samples", help="ensemble size")
        sp.add_argument("--tol", help="eigenpair residual tolerance")
        sp.add_argument("--trace-tol", dest="trace_tol", help="relative trace remainder tolerance")

    for name, fn, help_ in [
        ("rates", cmd_rates, "tabulate x_t, h and the rate denominator"),
        ("spectrum", cmd_spectrum, "lowest eigenvalues of one ensemble member"),
        ("laplace", cmd_laplace, "estimate L(t) on tori"),
        ("ids", cmd_ids, "estimate the IDS on tori"),
        ("tauber", cmd_tauber, "numeric Tauberian check on a synthetic measure"),
        ("study", cmd_study, "rate-shape study with M chosen from t"),
        ("verify", cmd_verify, "quick closed-form self-check"),
    ]:
        sp = sub.add_parser(name, help=help_)
        fields(sp)
        sp.set_defaults(func=fn)
        if name in ("rates", "tauber"):
            sp.add_argument("--bundle", help="rates(...) text form")
        if name == "tauber":
            sp.add_argument("--scale", type=float, default=1.0)
        if name == "spectrum":
            sp.add_argument("--sample", type=int, default=0, help="ensemble member index")
    return p


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_USAGE
    try:
        return args.func(args)
    except NumericError as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (ValueError, KeyError, DomainError, PreconditionError, OSError) as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
