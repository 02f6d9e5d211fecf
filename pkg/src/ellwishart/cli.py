"""Command-line interface: ``ellwishart {sample,moments,fit,verify}``.

Exit codes
----------
0  success
1  ``verify`` found a failing check
2  bad flags, or an unreadable or ill-formed data file
3  parameters outside the domain of the requested distribution or moment
4  a data record is not symmetric positive definite
"""
from __future__ import annotations

import argparse
import json
import os
import re
import sys

import numpy as np

from . import __version__
from .distributions import EwParams, coefficients, mean, variance
from .errors import (EllWishartError, MemoryBudgetError, MomentDoesNotExistError,
                     NotPositiveDefiniteError, ParameterError)
from .generators import Gaussian, GeneralizedGaussian, Kotz, StudentT
from .io import DatasetFormatError, RecordNotSPDError, read_matrix_file, write_matrix_file
from .kronecker import DEFAULT_MEMORY_BUDGET, kron_moment, mc_kron_moment

EXIT_OK, EXIT_VERIFY_FAILED, EXIT_USAGE, EXIT_DOMAIN, EXIT_NOT_SPD = 0, 1, 2, 3, 4

SEED_ENV = "ELLWISHART_SEED"


class _UsageError(Exception):
    pass


def _seed(args):
    if args.seed is not None:
        return args.seed
    env = os.environ.get(SEED_ENV)
    if env:
        try:
            return int(env)
        except ValueError:
            raise _UsageError(f"{SEED_ENV} must be an integer, got {env!r}") from None
    return None


def _add_distribution(parser):
    g = parser.add_argument_group("distribution")
    g.add_argument("--dist", required=True,
                   choices=["wishart", "t-wishart", "gg-wishart", "kotz-wishart"])
    g.add_argument("--inverse", action="store_true", help="use the inverse law")
    g.add_argument("--n", type=int, required=True, help="degrees of freedom")
    g.add_argument("--p", type=int, required=True, help="matrix dimension")
    g.add_argument("--sigma", default="identity",
                   help="'identity' or a file holding one matrix record")
    g.add_argument("--nu", type=float, help="t degrees of freedom")
    g.add_argument("--beta", type=float, help="generalized Gaussian / Kotz shape")
    g.add_argument("--alpha", type=float, help="Kotz alpha")
    g.add_argument("--bigr", type=float, help="Kotz R")


def _generator(args):
    if args.dist == "wishart":
        return Gaussian()
    if args.dist == "t-wishart":
        if args.nu is None:
            raise _UsageError("--dist t-wishart needs --nu")
        return StudentT(args.nu)
    if args.dist == "gg-wishart":
        if args.beta is None:
            raise _UsageError("--dist gg-wishart needs --beta")
        return GeneralizedGaussian(args.beta)
    missing = [f for f in ("alpha", "beta", "bigr") if getattr(args, f) is None]
    if missing:
        raise _UsageError("--dist kotz-wishart needs " + ", ".join("--" + m for m in missing))
    return Kotz(args.alpha, args.beta, args.bigr)


def _sigma(args):
    if args.p < 1:
        raise ParameterError(f"p must be >= 1, got {args.p}")
    if args.sigma == "identity":
        return np.eye(args.p)
    _, mats = read_matrix_file(args.sigma, args.p)
    if mats.shape[0] != 1:
        raise DatasetFormatError(f"{args.sigma}: expected one matrix record, found {mats.shape[0]}")
    return mats[0]


def _params(args):
    gen = _generator(args)
    return EwParams(args.n, _sigma(args), gen, inverse=args.inverse)


def _say(args, text):
    if not getattr(args, "quiet", False):
        print(text)


# ---------------------------------------------------------------------------
# subcommands


def run_sample(args):
    from .sampling import sample

    params = _params(args)
    seed = _seed(args)
    if args.count < 1:
        raise ParameterError(f"--count must be >= 1, got {args.count}")
    rng = np.random.default_rng(seed)
    draws = sample(params, rng, args.method, size=args.count)
    header = (f"ellwishart {args.dist}{' inverse' if args.inverse else ''} n={params.n} "
              f"p={params.p} count={args.count} seed={seed} method={args.method}\n"
              "records: column-major vec of each matrix")
    write_matrix_file(args.out, draws, header=header)
    emp = float(np.mean(np.trace(draws, axis1=1, axis2=2)))
    _say(args, f"wrote {args.count} matrices to {args.out}")
    _say(args, f"empirical mean trace: {emp:.6g}")
    try:
        _say(args, f"closed-form mean trace: {float(np.trace(mean(params))):.6g}")
    except MomentDoesNotExistError as exc:
        _say(args, f"closed-form mean trace: nonexistent ({_reason(exc)})")
    return EXIT_OK


def _reason(exc):
    text = str(exc)
    return text.split(": ", 1)[1] if text.startswith(("EW ", "IEW ")) else text


def _quantity(fn):
    try:
        return {"exists": True, "value": np.asarray(fn()).tolist()}
    except (MomentDoesNotExistError, MemoryBudgetError) as exc:
        return {"exists": False, "reason": str(exc)}


def run_moments(args):
    params = _params(args)
    if args.order < 1:
        raise ParameterError(f"--order must be >= 1, got {args.order}")
    budget = args.memory_budget
    out = {
        "schema_version": 1,
        "distribution": args.dist,
        "inverse": params.inverse,
        "n": params.n,
        "p": params.p,
        "generator": params.gen.to_dict(),
        "sigma": params.sigma.tolist(),
        "coefficients": coefficients(params.gen, params.n, params.p).to_dict(),
        "mean": _quantity(lambda: mean(params)),
        "variance": _quantity(lambda: variance(params)),
        "kronecker": {},
    }
    exact = {}
    for k in range(1, args.order + 1):
        q = _quantity(lambda: kron_moment(params, k, budget))
        out["kronecker"][str(k)] = q
        if q["exists"]:
            exact[k] = np.asarray(q["value"])
    if args.mc:
        seed = _seed(args)
        rng = np.random.default_rng(seed)
        mc = {"N": args.mc, "seed": seed, "orders": {}}
        for k in range(1, args.order + 1):
            est, se = mc_kron_moment(params, k, args.mc, rng, budget)
            entry = {"estimate": est.tolist(), "standard_error": se.tolist()}
            if k in exact:
                diff = np.abs(est - exact[k])
                z = np.where(se > 0, diff / np.where(se > 0, se, 1.0), 0.0)
                entry["max_abs_z"] = float(np.max(z))
            mc["orders"][str(k)] = entry
        out["mc"] = mc
    computed = [out["mean"], out["variance"], *out["kronecker"].values()]
    text = json.dumps(out, indent=2)
    if args.out:
        with open(args.out, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text + "\n")
        _say(args, f"wrote {args.out}")
    else:
        print(text)
    if not any(q["exists"] for q in computed):
        print("no requested quantity exists for these parameters", file=sys.stderr)
        return EXIT_DOMAIN
    return EXIT_OK


def _parse_nu_list(text):
    out = {}
    for item in text.split(","):
        item = item.strip()
        if not item:
            continue
        m = re.fullmatch(r"([^:=]+)[:=]\s*([0-9.eE+-]+)", item)
        if not m:
            raise _UsageError(f"--nu-per-class entries look like LABEL=NU, got {item!r}")
        out[m.group(1).strip()] = float(m.group(2))
    return out


def _safe_label(label):
    return re.sub(r"[^A-Za-z0-9_.-]", "_", label)


def _fmt(x):
    return repr(float(x))


def run_fit(args):
    from .fitting import StatisticKind, fit_report

    try:
        stats = [StatisticKind(s.strip()) for s in args.stats.split(",") if s.strip()]
    except ValueError:
        raise _UsageError(
            f"--stats must be a comma list of {', '.join(k.value for k in StatisticKind)}") from None
    if not stats:
        raise _UsageError("--stats is empty")
    labels, mats = read_matrix_file(args.data, args.dim, labeled=args.labeled)
    if mats.shape[0] == 0:
        raise DatasetFormatError(f"{args.data}: no records")
    if labels is None:
        dataset = {"all": mats}
    else:
        dataset = {}
        for lab in dict.fromkeys(labels):
            dataset[lab] = mats[[i for i, l in enumerate(labels) if l == lab]]
    if args.nu_per_class:
        nu = _parse_nu_list(args.nu_per_class)
    else:
        nu = args.nu
    seed = _seed(args)
    report = fit_report(dataset, args.n, nu=nu, stats=stats, mc_count=args.mc_samples,
                        seed=seed, grid_size=512, method=args.method, workers=args.workers)
    os.makedirs(args.out_dir, exist_ok=True)
    for label, cf in report.classes.items():
        for kind, curve in cf.curves.items():
            name = f"cdf_{kind.value}_class_{_safe_label(label)}.csv"
            with open(os.path.join(args.out_dir, name), "w", encoding="utf-8", newline="\n") as fh:
                fh.write("x,data_cdf,wishart_cdf,t_wishart_cdf\n")
                for row in curve:
                    fh.write(",".join(_fmt(v) for v in row) + "\n")
    with open(os.path.join(args.out_dir, "report.json"), "w", encoding="utf-8",
              newline="\n") as fh:
        json.dump(report.to_json_dict(), fh, indent=2)
        fh.write("\n")
    for label, cf in report.classes.items():
        for kind, per in cf.ks.items():
            _say(args, f"class {label} {kind.value}: wishart p={per['wishart'].p:.3g} "
                       f"t-wishart p={per['t_wishart'].p:.3g}")
    return EXIT_OK


def run_verify(args):
    from .verify import DEFAULT_SEED, commutation_fault, run_suite

    seed = args.seed if args.seed is not None else DEFAULT_SEED
    only = None
    if args.only:
        only = {int(x) for x in args.only.split(",")}
    if args.inject_fault == "commutation":
        with commutation_fault():
            results = run_suite(seed, args.quick, only, echo=print)
    else:
        results = run_suite(seed, args.quick, only, echo=print)
    failed = [r for r in results if not r.passed]
    print(f"{len(results) - len(failed)}/{len(results)} checks passed")
    return EXIT_VERIFY_FAILED if failed else EXIT_OK


# ---------------------------------------------------------------------------


def build_parser():
    parser = argparse.ArgumentParser(
        prog="ellwishart",
        description="Elliptical Wishart distributions: sampling, moments, fitting.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("sample", help="draw random matrices")
    _add_distribution(p)
    p.add_argument("--count", type=int, default=1000)
    p.add_argument("--seed", type=int)
    p.add_argument("--method", choices=["bartlett", "naive"], default="bartlett")
    p.add_argument("--out", required=True)
    p.add_argument("--quiet", action="store_true")
    p.set_defaults(func=run_sample)

    p = sub.add_parser("moments", help="closed-form moments as JSON")
    _add_distribution(p)
    p.add_argument("--order", type=int, default=2, help="highest Kronecker order")
    p.add_argument("--mc", type=int, default=0, help="Monte Carlo draws for a cross-check")
    p.add_argument("--seed", type=int)
    p.add_argument("--memory-budget", type=int, default=DEFAULT_MEMORY_BUDGET,
                   help="bytes allowed per Kronecker moment")
    p.add_argument("--out")
    p.add_argument("--quiet", action="store_true")
    p.set_defaults(func=run_moments)

    p = sub.add_parser("fit", help="goodness of fit of Wishart and t-Wishart models")
    p.add_argument("--data", required=True)
    p.add_argument("--dim", type=int, required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--labeled", action="store_true")
    nu = p.add_mutually_exclusive_group()
    nu.add_argument("--nu", type=float)
    nu.add_argument("--nu-per-class", help="e.g. 13=40,17=35")
    p.add_argument("--stats", default=",".join(
        ["trace", "trace2", "trace3", "norm", "norm2", "norm3", "neglog10det"]))
    p.add_argument("--mc-samples", type=int, default=100_000)
    p.add_argument("--seed", type=int)
    p.add_argument("--method", choices=["bartlett", "naive"], default="bartlett")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--out-dir", required=True)
    p.add_argument("--quiet", action="store_true")
    p.set_defaults(func=run_fit)

    p = sub.add_parser("verify", help="run the acceptance suite")
    p.add_argument("--quick", action="store_true", help="smaller Monte Carlo sizes")
    p.add_argument("--seed", type=int)
    p.add_argument("--only", help="comma list of check numbers")
    p.add_argument("--inject-fault", choices=["commutation"], help=argparse.SUPPRESS)
    p.set_defaults(func=run_verify)
    return parser


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if isinstance(exc.code, int) else EXIT_USAGE
    try:
        return args.func(args)
    except _UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"ellwishart: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except RecordNotSPDError as exc:
        print(f"ellwishart: record {exc.record} is not SPD: {exc}", file=sys.stderr)
        return EXIT_NOT_SPD
    except DatasetFormatError as exc:
        print(f"ellwishart: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except NotPositiveDefiniteError as exc:
        print(f"ellwishart: not SPD: {exc}", file=sys.stderr)
        return EXIT_NOT_SPD
    except (ParameterError, MemoryBudgetError) as exc:
        print(f"ellwishart: {exc}", file=sys.stderr)
        return EXIT_DOMAIN
    except EllWishartError as exc:
        print(f"ellwishart: {exc}", file=sys.stderr)
        return EXIT_DOMAIN


if __name__ == "__main__":
    sys.exit(main())
