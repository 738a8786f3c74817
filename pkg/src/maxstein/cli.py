"""Command-line entry point: ``maxstein <subcommand> ...``.

Every subcommand writes a CSV (to ``--out`` or standard output) whose first
line is a ``# meta:`` comment recording the full configuration. Exit status
is 0 on success, 1 when a numerical tolerance check fails and 2 on usage
errors.
"""

from __future__ import annotations

import argparse
import math
import sys
from importlib import resources
from pathlib import Path

import numpy as np

from . import __version__
from .bounds import ck_constant, cw_constant
from .lepage import sample_configuration
from .measures import DomainError, MaxStableLaw, cdf, read_law
from .metrics import GridSpec, ipm_lower_bound, kolmogorov_between_laws
from .quadrature import QuadratureError
from .ratelab import RATE_METRICS, FitError, RateExperiment, SlopeFit, geometric_grid, rate_report, run_rate_experiment
from .report import ExperimentReport, write_report
from .sampling import THREADS_ENV, RngStream, default_threads, map_blocks, sample_exact
from .semigroup import SemigroupQuery, generator_bank, semigroup_chaos, semigroup_indicator, semigroup_mc
from .stein import IndicatorSolution, stein_residual_indicator
from .testfunctions import LIP1, LIP2, BoxIndicator, get_bank

EXIT_OK, EXIT_TOLERANCE, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


# argument helpers --------------------------------------------------------------

def resolve_law(spec: str) -> MaxStableLaw:
    """A law file path, or the name of a packaged fixture (``indep2``, ``dep2``, ``mix2``)."""
    p = Path(spec)
    if p.is_file():
        return read_law(p)
    name = spec if spec.endswith(".law") else spec + ".law"
    fixture = resources.files("maxstein").joinpath("laws", name)
    if fixture.is_file():
        return read_law(fixture)
    raise UsageError(f"--law: no such file or packaged law: {spec!r}")


def packaged_laws():
    return sorted(f.name for f in resources.files("maxstein").joinpath("laws").iterdir() if f.name.endswith(".law"))


def vector(key: str, text: str, d: int | None = None) -> np.ndarray:
    try:
        v = np.array([float(t) for t in text.split(",")])
    except ValueError:
        raise UsageError(f"{key}: expected comma-separated numbers, got {text!r}") from None
    if d is not None and v.size != d:
        raise UsageError(f"{key}: expected {d} coordinates, got {v.size}")
    return v


def n_grid(text: str) -> list:
    parts = text.split(":")
    try:
        if len(parts) == 3 and parts[2] == "geometric":
            return geometric_grid(int(parts[0]), int(parts[1]))
        return [int(t) for t in text.split(",")]
    except ValueError:
        raise UsageError(f"--n-grid: expected LO:HI:geometric or a comma list, got {text!r}") from None


def positive(key, value, strict=True):
    if value is None:
        return value
    if (strict and not value > 0) or (not strict and not value >= 0):
        raise UsageError(f"{key} must be {'positive' if strict else 'nonnegative'}, got {value}")
    return value


def base_meta(args, law=None, **extra):
    meta = {k: v for k, v in vars(args).items() if k not in ("func", "threads", "out")}
    if law is not None:
        meta["law_alpha"] = law.alpha
        meta["law_d"] = law.dimension
    meta.update(extra)
    return meta


# subcommands -------------------------------------------------------------------

def cmd_sample(args):
    law = resolve_law(args.law)
    positive("--n", args.n)
    rng = RngStream(args.seed)
    if args.method == "exact":
        x = sample_exact(law, rng, args.n, threads=args.threads)
    else:
        positive("--big-n", args.big_n)
        parts = map_blocks(lambda s, m: np.stack([sample_configuration(law, s.child(i), args.big_n).scaled().max(axis=0)
                                                  for i in range(m)]), rng, args.n, block=1024, threads=args.threads)
        x = np.concatenate(parts)
    rep = ExperimentReport([f"z{j + 1}" for j in range(law.dimension)], meta=base_meta(args, law))
    for row in x:
        rep.add(*row)
    write_report(rep, args.out)
    return EXIT_OK


def cmd_cdf(args):
    law = resolve_law(args.law)
    z = vector("--z", args.z, law.dimension)
    value = float(cdf(law, z))
    if args.out is None:
        print(f"{value:.7g}")
    else:
        rep = ExperimentReport(["cdf"], meta=base_meta(args, law))
        rep.add(value)
        write_report(rep, args.out)
    return EXIT_OK


def cmd_semigroup(args):
    law = resolve_law(args.law)
    x = vector("--x", args.x, law.dimension)
    positive("--t", args.t, strict=False)
    positive("--reps", args.reps)
    if (args.indicator is None) == (args.bank is None):
        raise UsageError("give exactly one of --indicator or --bank")
    q = SemigroupQuery(law, args.t, x)
    estimator = semigroup_chaos if args.method == "chaos" else semigroup_mc
    rep = ExperimentReport(["function", "estimate", "std_error", "closed_form"], meta=base_meta(args, law))
    if args.indicator is not None:
        z = vector("--indicator", args.indicator, law.dimension)
        est = estimator(q, BoxIndicator(z), RngStream(args.seed), args.reps, threads=args.threads)
        rep.add("indicator", est.value, est.std_error, semigroup_indicator(q, z))
    else:
        for i, h in enumerate(get_bank(args.bank, law.dimension)):
            est = estimator(q, h, RngStream(args.seed, i), args.reps, threads=args.threads)
            rep.add(h.name, est.value, est.std_error, "")
    write_report(rep, args.out)
    return EXIT_OK


def _random_points(law, z, rng, n):
    # log-normal cloud around z, with a quarter of the points pushed inside the box
    g = rng.generator()
    x = z * np.exp(g.normal(scale=1.0, size=(n, law.dimension)))
    inside = g.random(n) < 0.25
    x[inside] = np.minimum(x[inside], z * (1 - 1e-3))
    return x


def cmd_stein_check(args):
    law = resolve_law(args.law)
    positive("--points", args.points)
    if args.mode == "indicator":
        if args.z is None:
            raise UsageError("--mode indicator needs --z")
        z = vector("--z", args.z, law.dimension)
        sol = IndicatorSolution(law, z)
        x = _random_points(law, z, RngStream(args.seed), args.points)
        r = stein_residual_indicator(sol, x)
        worst = float(np.max(np.abs(r)))
        tol = 1e-10 if args.tol is None else args.tol
        rep = ExperimentReport([f"x{j + 1}" for j in range(law.dimension)] + ["residual"],
                               meta=base_meta(args, law, max_residual=worst, tolerance=tol))
        for xi, ri in zip(x, r):
            rep.add(*xi, ri)
    else:
        # mean of L h over exact draws, in standard errors, for every bank member
        tol = 4.0 if args.tol is None else args.tol
        bank = get_bank(args.bank, law.dimension)
        draws = sample_exact(law, RngStream(args.seed), args.points, threads=args.threads)
        vals = generator_bank(law, draws, bank)
        mean = vals.mean(axis=0)
        se = vals.std(axis=0, ddof=1) / math.sqrt(vals.shape[0])
        zs = mean / se
        worst = float(np.max(np.abs(zs)))
        rep = ExperimentReport(["function", "mean", "std_error", "z_score"],
                               meta=base_meta(args, law, max_abs_z=worst, tolerance=tol))
        for h, m, s, zz in zip(bank, mean, se, zs):
            rep.add(h.name, m, s, zz)
    write_report(rep, args.out)
    if worst > tol:
        print(f"stein-check: max {'residual' if args.mode == 'indicator' else '|z|'} {worst:.3e} exceeds {tol:g}",
              file=sys.stderr)
        return EXIT_TOLERANCE
    return EXIT_OK


def cmd_law_distance(args):
    l1, l2 = resolve_law(args.law1), resolve_law(args.law2)
    if l1.dimension != l2.dimension:
        raise UsageError("--law1 and --law2 have different dimensions")
    if args.metric == "kolmogorov":
        value, arg = kolmogorov_between_laws(l1, l2, GridSpec(nodes=args.grid))
        rep = ExperimentReport(["metric", "lower_bound", "argmax"],
                               meta=base_meta(args, note="grid supremum, a lower bound on d_K"))
        rep.add("kolmogorov", value, arg)
    else:
        positive("--reps", args.reps)
        bank = get_bank(args.bank, l1.dimension)
        a = sample_exact(l1, RngStream(args.seed, 1), args.reps, threads=args.threads)
        b = sample_exact(l2, RngStream(args.seed, 2), args.reps, threads=args.threads)
        level = LIP1 if args.metric == "wasserstein" else LIP2
        best, table = ipm_lower_bound(a, b, bank, level)
        rep = ExperimentReport(["function", "gap", "std_error"],
                               meta=base_meta(args, max_gap=best, note=f"bank supremum, a lower bound on {args.metric}"))
        for row in table:
            rep.add(row.name, row.gap, row.std_error)
    write_report(rep, args.out)
    return EXIT_OK


def cmd_constants(args):
    law = resolve_law(args.law)
    fn = ck_constant if args.metric == "K" else cw_constant
    r = fn(args.alpha1, args.alpha2, law.angular)
    rep = ExperimentReport(["constant", "value", "quad_error", "alpha1", "alpha2", "nu"], meta=base_meta(args, law))
    rep.add(*r.row())
    write_report(rep, args.out)
    return EXIT_OK


def cmd_lepage_rate(args):
    law = resolve_law(args.law)
    if args.alpha is not None:
        law = law.with_alpha(positive("--alpha", args.alpha))
    e = RateExperiment(law, n_grid(args.n_grid), args.big_n, args.reps, args.metric, args.seed)
    rows, fit = run_rate_experiment(e, threads=args.threads)
    write_report(rate_report(e, rows, fit if args.fit else None, extra={"law": args.law}), args.out)
    if args.fit and not isinstance(fit, SlopeFit):
        print(f"lepage-rate: {fit}", file=sys.stderr)
        return EXIT_TOLERANCE
    return EXIT_OK


# parser ------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0, help="base seed (default 0)")
    common.add_argument("--threads", type=int, default=None,
                        help=f"worker threads (default ${THREADS_ENV} or 1); never changes results")
    common.add_argument("--out", default=None, help="output CSV path (default: standard output)")

    p = argparse.ArgumentParser(prog="maxstein", description=__doc__.splitlines()[0],
                                epilog="packaged laws: " + ", ".join(packaged_laws()))
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", metavar="command")

    s = sub.add_parser("sample", parents=[common], help="draw from MS(alpha, nu)")
    s.add_argument("--law", required=True)
    s.add_argument("--n", type=int, default=1000)
    s.add_argument("--method", choices=("exact", "lepage"), default="exact")
    s.add_argument("--big-n", type=int, default=10000, help="truncation level for --method lepage")
    s.set_defaults(func=cmd_sample)

    s = sub.add_parser("cdf", parents=[common], help="exact CDF at a point")
    s.add_argument("--law", required=True)
    s.add_argument("--z", required=True, help="comma-separated point")
    s.set_defaults(func=cmd_cdf)

    s = sub.add_parser("semigroup", parents=[common], help="Monte Carlo semigroup values")
    s.add_argument("--law", required=True)
    s.add_argument("--t", type=float, required=True)
    s.add_argument("--x", required=True)
    s.add_argument("--indicator", default=None, help="box corner z for h = 1_[0,z]")
    s.add_argument("--bank", default=None, help="test function bank name (smooth)")
    s.add_argument("--reps", type=int, default=100000)
    s.add_argument("--method", choices=("mc", "chaos"), default="mc")
    s.set_defaults(func=cmd_semigroup)

    s = sub.add_parser("stein-check", parents=[common], help="Stein equation residuals")
    s.add_argument("--law", required=True)
    s.add_argument("--mode", choices=("indicator", "smooth"), required=True)
    s.add_argument("--z", default=None)
    s.add_argument("--points", type=int, default=1000)
    s.add_argument("--bank", default="smooth")
    s.add_argument("--tol", type=float, default=None,
                   help="max residual (indicator, default 1e-10) or max |z-score| (smooth, default 4)")
    s.set_defaults(func=cmd_stein_check)

    s = sub.add_parser("law-distance", parents=[common], help="distance bounds between two laws")
    s.add_argument("--law1", required=True)
    s.add_argument("--law2", required=True)
    s.add_argument("--metric", choices=("kolmogorov", "wasserstein", "d2"), default="kolmogorov")
    s.add_argument("--grid", type=int, default=64, help="log-grid nodes per axis")
    s.add_argument("--bank", default="smooth")
    s.add_argument("--reps", type=int, default=100000)
    s.set_defaults(func=cmd_law_distance)

    s = sub.add_parser("constants", parents=[common], help="C^K or C^W bound constants")
    s.add_argument("--alpha1", type=float, required=True)
    s.add_argument("--alpha2", type=float, required=True)
    s.add_argument("--law", required=True, help="law whose angular measure is used")
    s.add_argument("--metric", choices=("K", "W"), default="K")
    s.set_defaults(func=cmd_constants)

    s = sub.add_parser("lepage-rate", parents=[common], help="truncation error along an n-grid")
    s.add_argument("--law", required=True)
    s.add_argument("--alpha", type=float, default=None, help="override the law's alpha")
    s.add_argument("--n-grid", default="8:512:geometric")
    s.add_argument("--big-n", type=int, default=10000)
    s.add_argument("--reps", type=int, default=100000)
    s.add_argument("--metric", choices=RATE_METRICS, default="coupledW")
    s.add_argument("--fit", action="store_true", help="fit a log-log slope; exit 1 if refused")
    s.set_defaults(func=cmd_lepage_rate)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "func", None) is None:
        parser.print_usage(sys.stderr)
        return EXIT_USAGE
    if args.threads is None:
        args.threads = default_threads()
    elif args.threads < 1:
        parser.error("--threads must be >= 1")
    try:
        return args.func(args)
    except (UsageError, DomainError, ValueError, KeyError, OSError) as exc:
        msg = exc.args[0] if isinstance(exc, KeyError) and exc.args else exc
        print(f"maxstein {args.command}: {msg}", file=sys.stderr)
        return EXIT_USAGE
    except (QuadratureError, FitError) as exc:
        print(f"maxstein {args.command}: {exc}", file=sys.stderr)
        return EXIT_TOLERANCE


if __name__ == "__main__":
    sys.exit(main())
