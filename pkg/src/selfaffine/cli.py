"""Command-line interface.

JSON reports go to stdout, human-readable messages to stderr. Exit codes:
0 ok, 1 parse/usage error, 2 validation failure, 3 precondition failure
(including singular systems and non-convergence), 4 disagreement.
"""
import argparse
import json
import sys
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import chaos_game, moments
from .exceptions import (
    DimensionUnsupported,
    InvalidArgument,
    InvalidModel,
    NoConvergence,
    ParseError,
    PreconditionError,
    SingularSystem,
)
from .model import load_ifs, validate

EXIT_OK = 0
EXIT_PARSE = 1
EXIT_VALIDATION = 2
EXIT_PRECONDITION = 3
EXIT_DISAGREE = 4


@dataclass(frozen=True, eq=False)
class ComparisonReport:
    exact: moments.MomentReport
    iterated: moments.MomentReport
    empirical: Optional[chaos_game.EmpiricalStats]
    max_abs_diff_exact_vs_iterated: float
    zscores_exact_vs_empirical: Optional[np.ndarray]
    tol: float
    sigma: float

    @property
    def agree(self):
        if not self.max_abs_diff_exact_vs_iterated <= self.tol:
            return False
        if self.zscores_exact_vs_empirical is not None:
            return bool(np.all(np.abs(self.zscores_exact_vs_empirical) <= self.sigma))
        return True

    @property
    def verdict(self):
        return "Agree" if self.agree else "Disagree"

    def to_dict(self):
        z = self.zscores_exact_vs_empirical
        return {
            "verdict": self.verdict,
            "tol": self.tol,
            "sigma": self.sigma,
            "max_abs_diff_exact_vs_iterated": self.max_abs_diff_exact_vs_iterated,
            "zscores_exact_vs_empirical": None if z is None else z.tolist(),
            "exact": self.exact.to_dict(),
            "iterated": self.iterated.to_dict(),
            "empirical": None if self.empirical is None else self.empirical.to_dict(),
        }


def compare(model, n=1_000_000, seed=42, burn_in=chaos_game.DEFAULT_BURN_IN, tol=1e-8,
            sigma=5.0, path="auto", reference=None, shards=1):
    """Cross-check exact moments against the iteration oracle and, if ``n``, the chaos game.

    ``reference`` replaces the freshly solved moments with a stored report,
    which turns the command into a regression check against that report.
    """
    exact = reference if reference is not None else moments.covariance(model, path=path)
    iterated = moments.covariance_by_iteration(model)
    diff = max(
        float(np.max(np.abs(np.asarray(x) - np.asarray(y))))
        for x, y in (
            (exact.mean, iterated.mean),
            (exact.second_moment, iterated.second_moment),
            (exact.cov, iterated.cov),
        )
    )
    empirical = z = None
    if n:
        empirical = chaos_game.sample(model, n, burn_in=burn_in, seed=seed, shards=shards)
        z = chaos_game.zscores(exact.mean, empirical)
    return ComparisonReport(exact, iterated, empirical, diff, z, tol, sigma)


def _emit(doc):
    print(json.dumps(doc, indent=2, allow_nan=False))


def _fail(code, kind, message, **extra):
    print(f"selfaffine: {message}", file=sys.stderr)
    _emit({"error": kind, "message": message, **extra})
    return code


def _load_valid(path):
    model = load_ifs(path)
    report = validate(model)
    if not report.passed:
        raise InvalidModel(report)
    return model


def cmd_validate(args):
    report = validate(load_ifs(args.file))
    _emit(report.to_dict())
    if not report.passed:
        print("selfaffine: " + "; ".join(report.failures()), file=sys.stderr)
        return EXIT_VALIDATION
    return EXIT_OK


def cmd_moments(args):
    model = _load_valid(args.file)
    if args.path == "iterate":
        report = moments.covariance_by_iteration(model, tol=args.tol, max_iter=args.max_iter)
    else:
        report = moments.covariance(model, path=args.path)
    _emit(report.to_dict())
    return EXIT_OK


def cmd_sample(args):
    model = _load_valid(args.file)
    stats = chaos_game.sample(model, args.n, burn_in=args.burn_in, seed=args.seed, shards=args.shards)
    _emit(stats.to_dict())
    return EXIT_OK


def cmd_compare(args):
    model = _load_valid(args.file)
    reference = None
    if args.reference:
        try:
            with open(args.reference, encoding="utf-8") as fh:
                reference = moments.MomentReport.from_dict(json.load(fh))
        except (ValueError, KeyError, TypeError) as exc:
            raise ParseError(f"unreadable reference report {args.reference}: {exc}") from None
    report = compare(
        model, n=args.n, seed=args.seed, burn_in=args.burn_in, tol=args.tol,
        sigma=args.sigma, path=args.path, reference=reference, shards=args.shards,
    )
    _emit(report.to_dict())
    if not report.agree:
        print(
            f"selfaffine: disagreement (max |exact - iterated| = "
            f"{report.max_abs_diff_exact_vs_iterated:.3e})",
            file=sys.stderr,
        )
        return EXIT_DISAGREE
    return EXIT_OK


def cmd_render(args):
    model = _load_valid(args.file)
    image = chaos_game.raster(
        model, args.n, burn_in=args.burn_in, seed=args.seed, width=args.width, height=args.height
    )
    image.write_pgm(args.out)
    lo, hi = image.bbox
    _emit({
        "out": args.out,
        "width": image.width,
        "height": image.height,
        "bbox": {"min": lo.tolist(), "max": hi.tolist()},
        "in_bbox": image.total,
        "dropped": image.dropped,
        "seed": args.seed,
    })
    return EXIT_OK


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        sys.exit(_fail(EXIT_PARSE, "usage", message))


def build_parser():
    parser = _Parser(prog="selfaffine", description="Moments of self-affine measures.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def command(name, func, help):
        p = sub.add_parser(name, help=help)
        p.add_argument("file", help="IFS JSON document")
        p.set_defaults(func=func)
        return p

    def sampling(p, n):
        p.add_argument("--n", type=int, default=n)
        p.add_argument("--burn-in", type=int, default=chaos_game.DEFAULT_BURN_IN)
        p.add_argument("--seed", type=int, default=42)

    command("validate", cmd_validate, "check contraction and weights")

    p = command("moments", cmd_moments, "exact mean and covariance")
    p.add_argument("--path", choices=["auto", "general", "fast", "iterate"], default="auto")
    p.add_argument("--tol", type=float, default=moments.DEFAULT_TOL)
    p.add_argument("--max-iter", type=int, default=moments.DEFAULT_MAX_ITER)

    p = command("sample", cmd_sample, "chaos-game moments")
    sampling(p, 1_000_000)
    p.add_argument("--shards", type=int, default=1)

    p = command("compare", cmd_compare, "exact vs iterated vs sampled")
    sampling(p, 1_000_000)
    p.add_argument("--shards", type=int, default=1)
    p.add_argument("--tol", type=float, default=1e-8)
    p.add_argument("--sigma", type=float, default=5.0)
    p.add_argument("--path", choices=["auto", "general", "fast"], default="auto")
    p.add_argument("--reference", help="stored moments report to use as the exact side")

    p = command("render", cmd_render, "rasterize the attractor to PGM")
    sampling(p, 1_000_000)
    p.add_argument("--width", type=int, default=512)
    p.add_argument("--height", type=int, default=512)
    p.add_argument("--out", required=True)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ParseError, OSError, UnicodeDecodeError) as exc:
        return _fail(EXIT_PARSE, "parse", str(exc))
    except InvalidModel as exc:
        return _fail(EXIT_VALIDATION, "validation", str(exc), validation=exc.report.to_dict())
    except (PreconditionError, SingularSystem, NoConvergence, DimensionUnsupported, InvalidArgument) as exc:
        return _fail(EXIT_PRECONDITION, "precondition", str(exc))


if __name__ == "__main__":
    sys.exit(main())
