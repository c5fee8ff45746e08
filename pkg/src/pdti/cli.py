"""Command-line front end.

Exit status: 0 when every contract checked by the run holds, 1 when one
fails, 2 for invalid arguments. Reports are canonical JSON (or CSV rows)
carrying the resolved configuration and no timestamps, so equal
configurations always produce equal bytes.
"""

from __future__ import annotations

import argparse
import math
import sys
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import bounds
from .errors import PdtiError
from .harness import (
    SCHEMA_VERSION,
    THEOREMS,
    SamplerConfig,
    convergence_experiment,
    derivative_residuals,
    dumps,
    gaussian_symbol,
    get_theorem,
    rows_to_csv,
    sample,
    tail_bound_experiment,
)
from .operators import fourier_representation
from .suite import CHECKS, run_all
from .tensor import Shape, from_json

EXIT_PASS, EXIT_FAIL, EXIT_USAGE = 0, 1, 2
PARAM_FLAGS = ("m", "n", "omega", "nu", "r0", "r1", "alpha", "beta")
G_CHOICES = ("heinz", "heinz_plus", "commutator", "bks", "interp", "interp_plus", "gaussian")


class UsageError(Exception):
    pass


@dataclass(frozen=True)
class RunConfig:
    command: str
    shape: tuple
    seed: int
    trials: Optional[int]
    theorem: Optional[str] = None
    params: dict = field(default_factory=dict)
    theta_grid: Optional[list] = None
    output_path: Optional[str] = None
    format: str = "json"
    extra: dict = field(default_factory=dict)

    def report_config(self) -> dict:
        """Everything that determines the output; the output path does not."""
        d = asdict(self)
        d.pop("output_path")
        d["shape"] = list(self.shape)
        return d


# argument parsing


def _shape(text: str) -> tuple:
    try:
        modes = tuple(int(v) for v in text.split(",") if v.strip())
        Shape(modes)
    except (ValueError, PdtiError):
        raise argparse.ArgumentTypeError(f"shape must be comma-separated positive integers, got {text!r}") from None
    return modes


def _theta_grid(text: str) -> list:
    try:
        lo, hi, npts = text.split(":")
        lo, hi, npts = float(lo), float(hi), int(npts)
    except ValueError:
        raise argparse.ArgumentTypeError(f"theta grid must be lo:hi:npts, got {text!r}") from None
    if not (0 < lo <= hi) or npts < 1:
        raise argparse.ArgumentTypeError("theta grid needs 0 < lo <= hi and npts >= 1")
    return [float(v) for v in np.logspace(math.log10(lo), math.log10(hi), npts)]


def _floats(text: str) -> list:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _nonneg_int(text: str) -> int:
    v = int(text)
    if v < 0:
        raise argparse.ArgumentTypeError("must be nonnegative")
    return v


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--shape", type=_shape, default=(2, 2), help="tensor modes, e.g. 2,2 (default)")
    common.add_argument("--seed", type=_nonneg_int, default=0, help="master seed (default 0)")
    common.add_argument("--out", default=None, help="report path (default: stdout)")
    common.add_argument("--format", choices=("json", "csv"), default="json", help="report format (default json)")
    common.add_argument("--workers", type=int, default=None, help="worker threads; PDTI_THREADS otherwise; never changes the output")

    params = argparse.ArgumentParser(add_help=False)
    params.add_argument("--m", type=int, help="integer exponent m")
    params.add_argument("--n", type=int, help="integer exponent n")
    params.add_argument("--omega", type=float, help="interpolation exponent omega")
    params.add_argument("--nu", type=float, help="commutator exponent nu")
    params.add_argument("--r0", type=float, help="left split r0 (r0 + r1 = 1)")
    params.add_argument("--r1", type=float, help="right split r1")
    params.add_argument("--alpha", type=float, help="exponent alpha in [0, 1]")
    params.add_argument("--beta", type=float, help="exponent beta in [0, 1]")

    sampler = argparse.ArgumentParser(add_help=False)
    sampler.add_argument("--ensemble", choices=("positive-definite", "gaussian-hermitian"), default="positive-definite")
    sampler.add_argument("--spectrum", type=_floats, default=[0.5, 2.0], help="lo,hi eigenvalue range for positive-definite draws (default 0.5,2)")

    p = argparse.ArgumentParser(prog="pdti", description="Double tensor integrals: verification, bounds and Monte Carlo tail experiments.")
    sub = p.add_subparsers(dest="command", required=True)

    v = sub.add_parser("verify", parents=[common], help="run the verification checks")
    v.add_argument("--trials", type=int, default=None, help="cap on Monte Carlo trials (default: full size)")
    v.add_argument("--only", nargs="+", choices=sorted(CHECKS), help="run a subset of checks")

    b = sub.add_parser("bound", parents=[common, params], help="Fourier L1 bound for a catalog profile")
    b.add_argument("--g", choices=G_CHOICES, required=True, help="profile name")

    t = sub.add_parser("tailbound", parents=[common, params, sampler], help="tail-bound Monte Carlo experiment")
    t.add_argument(
        "--theorem",
        choices=sorted(THEOREMS),
        required=True,
        help="; ".join(f"{k}: {v.summary}" for k, v in sorted(THEOREMS.items())),
    )
    t.add_argument("--trials", type=int, default=2000, help="trials (default 2000)")
    t.add_argument("--theta-grid", type=_theta_grid, default=None, help="lo:hi:npts log-spaced thresholds (default: 12 points around the median)")
    t.add_argument("--x-file", default=None, help="JSON tensor used as the fixed probe X")

    c = sub.add_parser("converge", parents=[common, sampler], help="continuity of T_psi under perturbed decompositions")
    c.add_argument("--symbol", choices=("gaussian", "heinz"), default="gaussian", help="gaussian symbol (spectral) or Heinz m=1, w=1/4 (quadrature)")
    c.add_argument("--trials", type=int, default=200)
    c.add_argument("--t-grid", type=_floats, default=[1.0, 0.1, 0.01, 0.001])
    c.add_argument("--threshold", type=float, default=1e-2, help="required final/initial gap ratio")

    d = sub.add_parser("derivcheck", parents=[common, params, sampler], help="finite-difference check of d/dt H_t^omega")
    d.add_argument("--t0", type=float, default=0.5)
    d.add_argument("--h-grid", type=_floats, default=[1e-4, 1e-5])
    d.add_argument("--tol", type=float, default=1e-4, help="residual tolerance at the smallest h")
    return p


def _params(args) -> dict:
    return {k: getattr(args, k) for k in PARAM_FLAGS if getattr(args, k, None) is not None}


def _sampler(args, cfg: RunConfig) -> SamplerConfig:
    if len(args.spectrum) != 2:
        raise UsageError("--spectrum takes exactly two numbers")
    return SamplerConfig(Shape(cfg.shape), cfg.seed, args.ensemble, tuple(args.spectrum))


# commands


def _gfunction(name: str, p: dict) -> bounds.GFunction:
    try:
        if name == "heinz":
            return bounds.heinz_g(p.get("m", 1), p.get("omega", 0.25))
        if name == "heinz_plus":
            return bounds.heinz_plus_g(p.get("m", 1), p.get("omega", 0.25))
        if name == "commutator":
            return bounds.commutator_g(p.get("nu", 0.5), p.get("r0", 0.5), p.get("r1", 0.5))
        if name == "bks":
            return bounds.bks_g(p.get("omega", 0.5))
        if name in ("interp", "interp_plus"):
            return bounds.interp_g(p.get("alpha", 0.5), p.get("beta", 0.5), "plus" if name == "interp_plus" else "minus")
        return bounds.gaussian_profile()
    except TypeError as exc:
        raise UsageError(str(exc)) from None


def cmd_verify(args, cfg: RunConfig):
    results = run_all(seed=cfg.seed, shape=Shape(cfg.shape), trials=cfg.trials, only=args.only)
    for r in results:
        print(r.line(), file=sys.stderr)
    doc = {"checks": [r.to_dict() for r in results], "passed": all(r.passed for r in results)}
    rows = [{"name": r.name, "passed": r.passed, "metric": r.metric, "tolerance": r.tolerance} for r in results]
    return doc, rows, doc["passed"]


def cmd_bound(args, cfg: RunConfig):
    g = _gfunction(args.g, cfg.params)
    rec = bounds.gfunction_bound(g).to_record()
    if rec["integrable"]:
        rec["sup_norm"] = bounds.sup_norm(g)
    doc = {"bound": rec}
    return doc, [{k: v for k, v in rec.items() if k != "params"} | {"params": str(rec["params"])}], True


def cmd_tailbound(args, cfg: RunConfig):
    sampler = _sampler(args, cfg)
    X = None
    if args.x_file:
        try:
            X = from_json(Path(args.x_file).read_text())
        except OSError as exc:
            raise UsageError(f"cannot read --x-file: {exc}") from None
    report = tail_bound_experiment(
        cfg.theorem, cfg.params, sampler, sampler, X=X, trials=cfg.trials, theta_grid=cfg.theta_grid, workers=args.workers
    )
    doc = report.to_dict()
    doc.pop("config")
    doc["passed"] = report.passed
    return doc, report.csv_rows(), report.passed or report.vacuous


def cmd_converge(args, cfg: RunConfig):
    sampler = _sampler(args, cfg)
    if args.symbol == "gaussian":
        psi = gaussian_symbol()
    else:
        if sampler.ensemble != "positive-definite":
            raise UsageError("the heinz symbol needs the positive-definite ensemble")
        lo, hi = sampler.spectrum_range
        # leave room for spectra widened by the perturbation
        t_max = math.log(4 * hi / lo)
        psi = fourier_representation(bounds.heinz_g(1, 0.25), t_max=t_max)
    report = convergence_experiment(psi, sampler, t_grid=args.t_grid, trials=cfg.trials, threshold=args.threshold, workers=args.workers)
    doc = report.to_dict()
    doc.pop("config")
    return doc, report.csv_rows(), report.passed


def cmd_derivcheck(args, cfg: RunConfig):
    sampler = _sampler(args, cfg)
    if sampler.ensemble != "positive-definite":
        raise UsageError("derivcheck needs the positive-definite ensemble")
    p = cfg.params
    omega, m, n = p.get("omega", 0.5), p.get("m", 1), p.get("n", 1)
    A = sample(sampler, sampler.rng(1, 0))
    B = sample(sampler, sampler.rng(2, 0))
    hs = list(args.h_grid)
    res = derivative_residuals(A, B, omega, m, n, args.t0, hs)
    order = sorted(range(len(hs)), key=lambda k: -hs[k])
    ratios = []
    first_order = True
    for a, b in zip(order, order[1:]):
        expected = hs[a] / hs[b]
        ratio = res[a] / res[b] if res[b] > 0 else math.inf
        ratios.append(ratio)
        # below round-off the residual stops scaling with h; only judge the
        # ratio while the truncation term dominates
        if omega < 1 and res[b] > 1e-9:
            first_order &= expected / 3 <= ratio <= expected * 3
    small = res[order[-1]]
    passed = small <= args.tol and first_order
    doc = {
        "h_grid": hs,
        "residuals": res,
        "ratios": ratios,
        "first_order": first_order,
        "tolerance": args.tol,
        "passed": passed,
    }
    rows = [{"h": h, "residual": r} for h, r in zip(hs, res)]
    return doc, rows, passed


COMMANDS = {
    "verify": cmd_verify,
    "bound": cmd_bound,
    "tailbound": cmd_tailbound,
    "converge": cmd_converge,
    "derivcheck": cmd_derivcheck,
}


def resolve(args) -> RunConfig:
    params = _params(args)
    theorem = getattr(args, "theorem", None)
    if theorem:
        params = get_theorem(theorem).resolve(params)
    extra = {}
    for key in ("g", "only", "ensemble", "spectrum", "x_file", "symbol", "t_grid", "threshold", "t0", "h_grid", "tol"):
        if getattr(args, key, None) is not None:
            extra[key] = getattr(args, key)
    trials = getattr(args, "trials", None)
    if trials is not None and trials < 1:
        raise UsageError("--trials must be positive")
    return RunConfig(
        command=args.command,
        shape=tuple(args.shape),
        seed=args.seed,
        trials=trials,
        theorem=theorem,
        params=params,
        theta_grid=getattr(args, "theta_grid", None),
        output_path=args.out,
        format=args.format,
        extra=extra,
    )


def _emit(text: str, path: Optional[str]):
    if path is None:
        sys.stdout.write(text)
    else:
        Path(path).write_text(text)


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else EXIT_USAGE
    try:
        cfg = resolve(args)
        doc, rows, passed = COMMANDS[args.command](args, cfg)
    except (UsageError, PdtiError) as exc:
        print(f"pdti {args.command}: {exc}", file=sys.stderr)
        return EXIT_USAGE
    doc = {"schema_version": SCHEMA_VERSION, "command": cfg.command, "config": cfg.report_config(), **doc}
    doc["passed"] = bool(passed)
    text = dumps(doc) if cfg.format == "json" else rows_to_csv(rows)
    try:
        _emit(text, cfg.output_path)
    except OSError as exc:
        print(f"pdti: cannot write report: {exc}", file=sys.stderr)
        return EXIT_USAGE
    return EXIT_PASS if passed else EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
