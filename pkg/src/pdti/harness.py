"""Seeded random tensors and the Monte Carlo experiments built on them.

Every trial draws from its own generator, seeded by
``SeedSequence([seed, stream, trial])``. Results therefore depend only on the
configuration, never on how trials are spread over worker threads.
Aggregates are summed with ``math.fsum`` in trial order.
"""

from __future__ import annotations

import csv
import io
import json
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Callable, Optional, Sequence, Union

import numpy as np
from scipy.stats import binomtest

from . import bounds
from .errors import DimensionError, ParameterError, ResampleError
from .operators import (
    BivariateSymbol,
    FactorizedRepresentation,
    pdti_apply_quadrature,
    pdti_apply_spectral,
    power_ratio_symbol,
)
from .spectral import EigenDecomposition, eigendecompose, tensor_power
from .tensor import DenseTensor, Shape, abs_tensor, commutator, fold, is_hermitian, random_tensor, spectral_norm

__all__ = [
    "SCHEMA_VERSION",
    "ENSEMBLES",
    "SamplerConfig",
    "sample_hermitian",
    "sample_positive_definite",
    "sample",
    "trial_rng",
    "THEOREMS",
    "TheoremSpec",
    "TailBoundReport",
    "ConvergenceReport",
    "MeanConvergenceReport",
    "tail_bound_experiment",
    "convergence_experiment",
    "derivative_residuals",
    "derivative_check",
    "mean_convergence_check",
    "gaussian_symbol",
    "default_theta_grid",
    "wilson_interval",
    "resolve_workers",
]

SCHEMA_VERSION = 1
ENSEMBLES = ("gaussian-hermitian", "positive-definite")
DEFAULT_SHAPE = Shape((2, 2))

# stream identifiers keep the A, B and probe draws of one trial independent
STREAM_A, STREAM_B, STREAM_X, STREAM_DIRECTION, STREAM_SEQUENCE = 1, 2, 3, 4, 5


# sampling


@dataclass(frozen=True)
class SamplerConfig:
    """Random tensor ensemble.

    ``spectrum_range`` is only read by the positive-definite ensemble, whose
    eigenvalues are i.i.d. uniform on it.
    """

    shape: Shape = DEFAULT_SHAPE
    seed: int = 0
    ensemble: str = "positive-definite"
    spectrum_range: tuple[float, float] = (0.5, 2.0)

    def __post_init__(self):
        if not isinstance(self.shape, Shape):
            object.__setattr__(self, "shape", Shape(tuple(self.shape)))
        if int(self.seed) != self.seed or not 0 <= self.seed < 2**64:
            raise ParameterError(f"seed must be an integer in [0, 2^64), got {self.seed!r}")
        object.__setattr__(self, "seed", int(self.seed))
        if self.ensemble not in ENSEMBLES:
            raise ParameterError(f"ensemble must be one of {ENSEMBLES}, got {self.ensemble!r}")
        lo, hi = (float(v) for v in self.spectrum_range)
        object.__setattr__(self, "spectrum_range", (lo, hi))
        if self.ensemble == "positive-definite" and not (0 < lo <= hi and math.isfinite(hi)):
            raise ParameterError(f"positive-definite ensemble needs 0 < lo <= hi, got {self.spectrum_range}")

    def rng(self, stream: int = 0, trial: int = 0) -> np.random.Generator:
        return trial_rng(self.seed, stream, trial)

    def to_dict(self) -> dict:
        return {
            "shape": list(self.shape.modes),
            "seed": self.seed,
            "ensemble": self.ensemble,
            "spectrum_range": list(self.spectrum_range),
        }


def trial_rng(seed: int, stream: int, trial: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence([int(seed), int(stream), int(trial)])))


def sample_hermitian(cfg: SamplerConfig, rng: Optional[np.random.Generator] = None) -> DenseTensor:
    """``(G + G^H) / 2`` with standard complex Gaussian ``G``."""
    rng = cfg.rng() if rng is None else rng
    return random_tensor(cfg.shape, rng, hermitian=True)


def haar_unitary(n: int, rng: np.random.Generator) -> np.ndarray:
    Z = (rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))) / math.sqrt(2)
    Q, R = np.linalg.qr(Z)
    d = np.diag(R)
    return Q * (d / np.abs(d))


def sample_positive_definite(cfg: SamplerConfig, rng: Optional[np.random.Generator] = None) -> DenseTensor:
    """``Q diag(lam) Q^H`` with Haar ``Q`` and ``lam`` uniform on the spectrum range."""
    lo, hi = cfg.spectrum_range
    if not 0 < lo <= hi:
        raise ParameterError(f"invalid spectrum range {cfg.spectrum_range}")
    rng = cfg.rng() if rng is None else rng
    n = cfg.shape.total
    Q = haar_unitary(n, rng)
    lam = rng.uniform(lo, hi, n)
    M = (Q * lam) @ Q.conj().T
    return fold((M + M.conj().T) / 2, cfg.shape)


def sample(cfg: SamplerConfig, rng: Optional[np.random.Generator] = None) -> DenseTensor:
    if cfg.ensemble == "positive-definite":
        return sample_positive_definite(cfg, rng)
    return sample_hermitian(cfg, rng)


def resolve_workers(workers: Optional[int] = None) -> int:
    """Explicit ``workers`` wins; otherwise ``PDTI_THREADS``; otherwise 1."""
    if workers is None:
        env = os.environ.get("PDTI_THREADS", "").strip()
        workers = int(env) if env.isdigit() else 1
    return max(1, int(workers))


def _run_trials(fn: Callable[[int], object], trials: int, workers: Optional[int]) -> list:
    """``[fn(0), ..., fn(trials - 1)]``, computed on up to ``workers`` threads."""
    workers = min(resolve_workers(workers), max(trials, 1))
    if workers == 1:
        return [fn(i) for i in range(trials)]
    chunks = [range(w, trials, workers) for w in range(workers)]
    out: list = [None] * trials
    with ThreadPoolExecutor(max_workers=workers) as pool:
        for chunk, results in zip(chunks, pool.map(lambda c: [fn(i) for i in c], chunks)):
            for i, r in zip(chunk, results):
                out[i] = r
    return out


def _mean_se(values: Sequence[float]) -> tuple[float, float]:
    n = len(values)
    if n == 0:
        return 0.0, 0.0
    mean = math.fsum(values) / n
    if n == 1:
        return mean, 0.0
    var = math.fsum((v - mean) ** 2 for v in values) / (n - 1)
    return mean, math.sqrt(var / n)


def wilson_interval(successes: int, n: int, confidence: float = 0.95) -> tuple[float, float]:
    if n == 0:
        return 0.0, 1.0
    ci = binomtest(int(successes), int(n)).proportion_ci(confidence_level=confidence, method="wilson")
    return float(ci.low), float(ci.high)


# theorem registry


def _powers(d: EigenDecomposition, *exponents: float) -> list[DenseTensor]:
    return [tensor_power(d, p) for p in exponents]


def _two_sided(A, B, X, pa1, pb1, pa2, pb2, sign):
    dA, dB = eigendecompose(A), eigendecompose(B)
    A1, A2 = _powers(dA, pa1, pa2)
    B1, B2 = _powers(dB, pb1, pb2)
    return A1 @ X @ B1 + sign * (A2 @ X @ B2)


def _heinz_stats(sign):
    def stats(A, B, X, p):
        m, w = p["m"], p["omega"]
        lhs = _two_sided(A, B, X, m - w, w, w, m - w, sign)
        dA, dB = eigendecompose(A), eigendecompose(B)
        Y = tensor_power(dA, m) @ X + sign * (X @ tensor_power(dB, m))
        return lhs, Y

    return stats


def _interp_stats(sign):
    def stats(A, B, X, p):
        m, n, a, b = p["m"], p["n"], p["alpha"], p["beta"]
        lhs = _two_sided(A, B, X, m * (1 + a) / 2, n * (1 - a) / 2, m * (1 - b) / 2, n * (1 + b) / 2, sign)
        dA, dB = eigendecompose(A), eigendecompose(B)
        Y = tensor_power(dA, m) @ X + sign * (X @ tensor_power(dB, n))
        return lhs, Y

    return stats


def _commutator_stats(A, B, X, p):
    nu, r0, r1 = p["nu"], p["r0"], p["r1"]
    absA = eigendecompose(abs_tensor(A))
    lhs = commutator(A @ tensor_power(absA, -nu), B)
    Y = tensor_power(absA, -r0 * nu) @ commutator(A, B) @ tensor_power(absA, -r1 * nu)
    return lhs, Y


def _bks_stats(A, B, X, p):
    w, m, n = p["omega"], p["m"], p["n"]
    dA, dB = eigendecompose(A), eigendecompose(B)
    lhs = tensor_power(dA, n * w) - tensor_power(dB, m * w)
    return lhs, tensor_power(dA, n) - tensor_power(dB, m)


def _heinz_symbol(sign):
    def build(p):
        m, w = p["m"], p["omega"]
        return power_ratio_symbol(w / m, (m - 2 * w) / m, w / m, sign, m, m, name=f"heinz[{sign}]")

    return build


def _interp_symbol(sign):
    def build(p):
        m, n, a, b = p["m"], p["n"], p["alpha"], p["beta"]
        return power_ratio_symbol((1 - b) / 2, (a + b) / 2, (1 - a) / 2, sign, m, n, name=f"interp[{sign}]")

    return build


def _commutator_symbol(p):
    nu, r0, r1 = p["nu"], p["r0"], p["r1"]
    return power_ratio_symbol(r0 * nu, 1 - nu, r1 * nu, "minus", name="commutator")


@dataclass(frozen=True)
class TheoremSpec:
    """One tail-bound statement.

    ``statistics(A, B, X, params)`` returns the tensors ``(L, Y)`` whose norms
    are the bounded statistic and the expectation factor's argument. When
    ``symbol`` is set, ``L = T_psi(Y)`` holds exactly, with ``T_psi`` built on
    the decompositions named by ``symbol_sides``.
    """

    name: str
    summary: str
    defaults: dict
    g: Callable[[dict], bounds.GFunction]
    statistics: Callable
    symbol: Optional[Callable[[dict], BivariateSymbol]] = None
    symbol_sides: str = "AB"
    power_expectation: bool = False
    uses_x: bool = True

    def resolve(self, params: Optional[dict] = None) -> dict:
        params = dict(params or {})
        unknown = set(params) - set(self.defaults)
        if unknown:
            raise ParameterError(f"{self.name} does not take {sorted(unknown)}")
        out = {**self.defaults, **params}
        for key in ("m", "n"):
            if key in out:
                if int(out[key]) != out[key] or out[key] < 1:
                    raise ParameterError(f"{key} must be a positive integer, got {out[key]!r}")
                out[key] = int(out[key])
        for key, v in out.items():
            if key not in ("m", "n"):
                out[key] = float(v)
        self.g(out)  # validates the remaining ranges
        if self.power_expectation and out["omega"] <= 0:
            raise ParameterError(f"{self.name} divides by omega; need omega > 0")
        return out


THEOREMS: dict[str, TheoremSpec] = {
    "thm5": TheoremSpec(
        "thm5",
        "||A^(m-w) X B^w - A^w X B^(m-w)|| against E||A^m X - X B^m||",
        {"m": 1, "omega": 0.25},
        lambda p: bounds.heinz_g(p["m"], p["omega"]),
        _heinz_stats(-1.0),
        _heinz_symbol("minus"),
    ),
    "cor4": TheoremSpec(
        "cor4",
        "||A^(m-w) X B^w + A^w X B^(m-w)|| against E||A^m X + X B^m||",
        {"m": 1, "omega": 0.25},
        lambda p: bounds.heinz_plus_g(p["m"], p["omega"]),
        _heinz_stats(1.0),
        _heinz_symbol("plus"),
    ),
    "thm6": TheoremSpec(
        "thm6",
        "||[A|A|^(-nu), B]|| against E|| |A|^(-r0 nu) [A, B] |A|^(-r1 nu) ||",
        {"nu": 0.5, "r0": 0.5, "r1": 0.5},
        lambda p: bounds.commutator_g(p["nu"], p["r0"], p["r1"]),
        _commutator_stats,
        _commutator_symbol,
        symbol_sides="AA",
        uses_x=False,
    ),
    "thm7": TheoremSpec(
        "thm7",
        "||A^(n w) - B^(m w)|| against E||A^n - B^m||^w, with an extra 1/w",
        {"omega": 0.5, "m": 1, "n": 1},
        lambda p: bounds.bks_g(p["omega"]),
        _bks_stats,
        None,
        power_expectation=True,
        uses_x=False,
    ),
    "thm8": TheoremSpec(
        "thm8",
        "||A^(m(1+a)/2) X B^(n(1-a)/2) - A^(m(1-b)/2) X B^(n(1+b)/2)|| against E||A^m X - X B^n||",
        {"alpha": 0.5, "beta": 0.5, "m": 1, "n": 1},
        lambda p: bounds.interp_g(p["alpha"], p["beta"], "minus"),
        _interp_stats(-1.0),
        _interp_symbol("minus"),
    ),
    "cor5": TheoremSpec(
        "cor5",
        "||A^(m(1+a)/2) X B^(n(1-a)/2) + A^(m(1-b)/2) X B^(n(1+b)/2)|| against E||A^m X + X B^n||",
        {"alpha": 0.5, "beta": 0.5, "m": 1, "n": 1},
        lambda p: bounds.interp_g(p["alpha"], p["beta"], "plus"),
        _interp_stats(1.0),
        _interp_symbol("plus"),
    ),
}


def get_theorem(name: str) -> TheoremSpec:
    try:
        return THEOREMS[name]
    except KeyError:
        raise ParameterError(f"unknown theorem {name!r}; choose from {sorted(THEOREMS)}") from None


# tail bounds


def default_theta_grid(lhs_values: Sequence[float], npts: int = 12) -> list[float]:
    """``npts`` log-spaced points over ``[0.1, 10]`` times the median statistic."""
    vals = np.asarray(lhs_values, dtype=float)
    center = float(np.median(vals)) if vals.size else 0.0
    if center <= 0:
        center = float(np.max(vals)) if vals.size and np.max(vals) > 0 else 1.0
    return [float(v) for v in center * np.logspace(-1, 1, npts)]


def _finite_or_none(x):
    if x is None:
        return None
    x = float(x)
    return x if math.isfinite(x) else None


@dataclass(frozen=True)
class TailBoundReport:
    theorem: str
    params: dict
    trials: int
    theta_grid: list
    empirical_tail: list  # [{"theta", "fraction", "ci_low", "ci_high"}]
    expectation_estimate: dict  # {"mean", "stderr"}
    lhs_estimate: dict
    bound: dict
    bound_rhs: list
    dominated: list
    markov_consistent: list
    chain: dict  # per-sample pre-Markov inequality
    identity_residual: Optional[float]
    vacuous: bool
    config: dict = field(default_factory=dict)
    samples: Optional[dict] = None

    @property
    def all_dominated(self) -> bool:
        return all(self.dominated)

    @property
    def passed(self) -> bool:
        return self.all_dominated and all(self.markov_consistent) and self.chain["violations"] == 0

    def to_dict(self, include_samples: bool = False) -> dict:
        d = asdict(self)
        if not include_samples:
            d.pop("samples")
        d["bound_rhs"] = [_finite_or_none(v) for v in self.bound_rhs]
        d["schema_version"] = SCHEMA_VERSION
        d["kind"] = "tailbound"
        return d

    def to_json(self, **kw) -> str:
        return dumps(self.to_dict(**kw))

    def csv_rows(self) -> list[dict]:
        rows = []
        for k, theta in enumerate(self.theta_grid):
            tail = self.empirical_tail[k]
            rows.append(
                {
                    "theorem": self.theorem,
                    "theta": theta,
                    "fraction": tail["fraction"],
                    "ci_low": tail["ci_low"],
                    "ci_high": tail["ci_high"],
                    "bound_rhs": _finite_or_none(self.bound_rhs[k]),
                    "dominated": self.dominated[k],
                    "markov_consistent": self.markov_consistent[k],
                }
            )
        return rows


def _tail_trial(spec, params, cfgA, cfgB, X, symbol, trial):
    A = sample(cfgA, cfgA.rng(STREAM_A, trial))
    B = sample(cfgB, cfgB.rng(STREAM_B, trial))
    L, Y = spec.statistics(A, B, X, params)
    lhs = spectral_norm(L)
    y = spectral_norm(Y)
    expectation = y ** params["omega"] if spec.power_expectation else y
    resid = None
    if symbol is not None:
        dA = eigendecompose(A)
        dB = dA if spec.symbol_sides == "AA" else eigendecompose(B)
        gap = spectral_norm(pdti_apply_spectral(symbol, dA, dB, Y) - L)
        resid = gap / max(lhs, y, 1e-300)
    return lhs, expectation, resid


def tail_bound_experiment(
    theorem: str,
    params: Optional[dict] = None,
    cfgA: Optional[SamplerConfig] = None,
    cfgB: Optional[SamplerConfig] = None,
    X: Optional[DenseTensor] = None,
    trials: int = 2000,
    theta_grid: Optional[Sequence[float]] = None,
    workers: Optional[int] = None,
    chain_slack: float = 1e-9,
    keep_samples: bool = False,
) -> TailBoundReport:
    """Monte Carlo tail probabilities of a theorem's statistic against its
    Markov-type right-hand side ``(total^2 / theta) * bound * E[factor]``
    (with an extra ``1 / omega`` for the power-difference statement).

    ``dominated[k]`` compares the upper Wilson bound on the tail with the
    right-hand side evaluated at ``mean - 2 * stderr`` of the factor.
    """
    spec = get_theorem(theorem)
    params = spec.resolve(params)
    cfgA = cfgA or SamplerConfig()
    cfgB = cfgB or SamplerConfig(cfgA.shape, cfgA.seed, cfgA.ensemble, cfgA.spectrum_range)
    if cfgA.shape != cfgB.shape:
        raise DimensionError(f"sampler shapes differ: {cfgA.shape} vs {cfgB.shape}")
    if trials < 1:
        raise ParameterError("trials must be positive")
    if X is None:
        X = sample_hermitian(SamplerConfig(cfgA.shape, cfgA.seed, "gaussian-hermitian"), cfgA.rng(STREAM_X, 0))
    elif X.shape != cfgA.shape:
        raise DimensionError(f"probe shape {X.shape} differs from sampler shape {cfgA.shape}")

    g = spec.g(params)
    bound = bounds.gfunction_bound(g)
    symbol = spec.symbol(params) if spec.symbol else None
    results = _run_trials(lambda i: _tail_trial(spec, params, cfgA, cfgB, X, symbol, i), trials, workers)
    lhs = [r[0] for r in results]
    expectation = [r[1] for r in results]

    total2 = cfgA.shape.total ** 2
    scale = total2 * bound.value / (params["omega"] if spec.power_expectation else 1.0)
    vacuous = not math.isfinite(scale)

    chain_ratio = []
    for l_i, e_i in zip(lhs, expectation):
        rhs = scale * e_i if not vacuous else math.inf
        chain_ratio.append(l_i / rhs if rhs > 0 else (0.0 if l_i <= chain_slack else math.inf))
    violations = sum(1 for l_i, e_i in zip(lhs, expectation) if not vacuous and l_i > scale * e_i + chain_slack)

    mean_e, se_e = _mean_se(expectation)
    mean_l, se_l = _mean_se(lhs)
    grid = list(map(float, theta_grid)) if theta_grid is not None else default_theta_grid(lhs)
    if any(t <= 0 for t in grid):
        raise ParameterError("theta values must be positive")

    tails, rhs_list, dominated, markov = [], [], [], []
    lhs_arr = np.asarray(lhs)
    for theta in grid:
        k = int(np.count_nonzero(lhs_arr >= theta))
        lo, hi = wilson_interval(k, trials)
        frac = k / trials
        tails.append({"theta": theta, "fraction": frac, "ci_low": lo, "ci_high": hi})
        rhs = scale * mean_e / theta if not vacuous else math.inf
        rhs_low = scale * max(mean_e - 2 * se_e, 0.0) / theta if not vacuous else math.inf
        rhs_list.append(rhs)
        dominated.append(bool(hi <= rhs_low))
        markov.append(bool(frac <= (mean_l + 3 * se_l) / theta))

    identity = None
    if symbol is not None:
        identity = max(r[2] for r in results)

    finite_ratios = [r for r in chain_ratio if math.isfinite(r)]
    config = {
        "theorem": spec.name,
        "params": params,
        "trials": trials,
        "samplerA": cfgA.to_dict(),
        "samplerB": cfgB.to_dict(),
        "theta_grid": None if theta_grid is None else grid,
    }
    return TailBoundReport(
        theorem=spec.name,
        params=params,
        trials=trials,
        theta_grid=grid,
        empirical_tail=tails,
        expectation_estimate={"mean": mean_e, "stderr": se_e},
        lhs_estimate={"mean": mean_l, "stderr": se_l},
        bound=bound.to_record(),
        bound_rhs=rhs_list,
        dominated=dominated,
        markov_consistent=markov,
        chain={
            "violations": violations,
            "slack": chain_slack,
            "max_ratio": max(finite_ratios) if finite_ratios else None,
        },
        identity_residual=identity,
        vacuous=vacuous,
        config=config,
        samples={"lhs": lhs, "expectation": expectation} if keep_samples else None,
    )


# convergence of T_psi along perturbed decompositions


def gaussian_symbol(width: float = 1.0) -> BivariateSymbol:
    """``exp(-(a - b)^2 / (2 width^2))``, smooth on all of the real plane."""
    return BivariateSymbol(lambda a, b: np.exp(-((a - b) ** 2) / (2 * width**2)), name=f"gaussian[{width}]")


@dataclass(frozen=True)
class ConvergenceReport:
    t_grid: list
    mean_operator_gap: list
    operator_gap_stderr: list
    mean_input_gap: list
    monotone_trend: int  # sign of d log(gap) / d log(t); +1 means the gap shrinks with t
    strictly_decreasing: bool
    final_ratio: Optional[float]
    threshold: float
    passed: bool
    config: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["schema_version"] = SCHEMA_VERSION
        d["kind"] = "converge"
        return d

    def to_json(self) -> str:
        return dumps(self.to_dict())

    def csv_rows(self) -> list[dict]:
        return [
            {"t": t, "mean_operator_gap": g, "stderr": s, "mean_input_gap": i}
            for t, g, s, i in zip(self.t_grid, self.mean_operator_gap, self.operator_gap_stderr, self.mean_input_gap)
        ]


def _apply(psi, dA, dB, X):
    if isinstance(psi, FactorizedRepresentation):
        return pdti_apply_quadrature(psi, dA, dB, X)
    return pdti_apply_spectral(psi, dA, dB, X)


def _convergence_trial(psi, cfgA, cfgB, direction, X, t_grid, trial):
    EA0 = sample(cfgA, cfgA.rng(STREAM_A, trial))
    EB0 = sample(cfgB, cfgB.rng(STREAM_B, trial))
    base = _apply(psi, eigendecompose(EA0), eigendecompose(EB0), X)
    ops, inputs = [], []
    for t in t_grid:
        EAt = EA0 + t * direction
        EBt = EB0 + t * direction
        ops.append(spectral_norm(_apply(psi, eigendecompose(EAt), eigendecompose(EBt), X) - base))
        inputs.append(spectral_norm(EAt - EA0))
    return ops, inputs


def convergence_experiment(
    psi: Union[BivariateSymbol, FactorizedRepresentation],
    cfg0: SamplerConfig,
    direction: Optional[DenseTensor] = None,
    t_grid: Sequence[float] = (1.0, 0.1, 0.01, 0.001),
    trials: int = 200,
    probe: Optional[DenseTensor] = None,
    cfgB: Optional[SamplerConfig] = None,
    threshold: float = 1e-2,
    workers: Optional[int] = None,
) -> ConvergenceReport:
    """Estimate ``E||T_{psi,t}(X) - T_{psi,0}(X)||`` along ``E_t = E_0 + t * direction``.

    The two families ``E_A`` and ``E_B`` are drawn independently (separate
    streams, optionally a separate config). ``passed`` requires strictly
    decreasing mean gaps and a final gap at most ``threshold`` times the first.
    """
    t_grid = [float(t) for t in t_grid]
    if not t_grid or any(t <= 0 for t in t_grid) or any(a <= b for a, b in zip(t_grid, t_grid[1:])):
        raise ParameterError("t_grid must be positive and strictly decreasing")
    cfgB = cfgB or cfg0
    shape = cfg0.shape
    herm = SamplerConfig(shape, cfg0.seed, "gaussian-hermitian")
    if direction is None:
        direction = sample_hermitian(herm, cfg0.rng(STREAM_DIRECTION, 0))
    if not is_hermitian(direction):
        raise ParameterError("direction must be Hermitian")
    X = probe if probe is not None else sample_hermitian(herm, cfg0.rng(STREAM_X, 0))

    results = _run_trials(lambda i: _convergence_trial(psi, cfg0, cfgB, direction, X, t_grid, i), trials, workers)
    gaps, ses, inputs = [], [], []
    for k in range(len(t_grid)):
        m, s = _mean_se([r[0][k] for r in results])
        gaps.append(m)
        ses.append(s)
        inputs.append(_mean_se([r[1][k] for r in results])[0])

    strictly = all(a > b for a, b in zip(gaps, gaps[1:]))
    positive = [i for i, gap in enumerate(gaps) if gap > 0]
    if len(positive) >= 2:
        slope = np.polyfit(np.log([t_grid[i] for i in positive]), np.log([gaps[i] for i in positive]), 1)[0]
        trend = int(np.sign(slope))
    else:
        trend = 0
    ratio = gaps[-1] / gaps[0] if gaps[0] > 0 else None
    passed = (strictly and ratio is not None and ratio <= threshold) or all(gap == 0 for gap in gaps)
    config = {
        "sampler": cfg0.to_dict(),
        "samplerB": cfgB.to_dict(),
        "t_grid": t_grid,
        "trials": trials,
        "threshold": threshold,
        "symbol": getattr(psi, "name", type(psi).__name__),
    }
    return ConvergenceReport(t_grid, gaps, ses, inputs, trend, strictly, ratio, threshold, passed, config)


# derivative of t -> H_t^omega along a segment of positive definite tensors


def _segment(A: DenseTensor, B: DenseTensor, m: int, n: int):
    dA, dB = eigendecompose(A), eigendecompose(B)
    if dA.eigenvalues[-1] <= 0 or dB.eigenvalues[-1] <= 0:
        raise ResampleError("A and B must be positive definite")
    H0 = tensor_power(dB, m)
    H1 = tensor_power(dA, n)
    return H0, H1


def derivative_residuals(
    A: DenseTensor,
    B: DenseTensor,
    omega: float,
    m: int = 1,
    n: int = 1,
    t0: float = 0.5,
    h_grid: Sequence[float] = (1e-4, 1e-5),
) -> list[float]:
    """Forward-difference residual of ``d/dt H_t^omega`` at ``t0`` for each ``h``.

    ``H_t = B^m + t (A^n - B^m)``. The derivative is taken through
    ``T_psi(H^((w-1)/2) (H_1 - H_0) H^((w-1)/2))`` with
    ``psi = u^((1-w)/2) * DD(x^w; u, v) * v^((1-w)/2)`` on ``Sp(H_t0)``.
    """
    if not 0 < omega <= 1:
        raise ParameterError(f"omega must lie in (0, 1], got {omega}")
    if not 0 < t0 < 1:
        raise ParameterError(f"t0 must lie in (0, 1), got {t0}")
    H0, H1 = _segment(A, B, m, n)
    Delta = H1 - H0

    def H(t):
        return H0 + t * Delta

    d0 = eigendecompose(H(t0))
    if d0.eigenvalues[-1] <= 0:
        raise ResampleError("H_t lost positive definiteness")
    side = tensor_power(d0, (omega - 1) / 2)
    psi = power_ratio_symbol((1 - omega) / 2, omega, (1 - omega) / 2, "minus", name="bks")
    deriv = pdti_apply_spectral(psi, d0, d0, side @ Delta @ side)
    base = tensor_power(H(t0), omega)
    out = []
    for h in h_grid:
        Hh = H(t0 + h)
        if eigendecompose(Hh).eigenvalues[-1] <= 0:
            raise ResampleError("H_t lost positive definiteness")
        quotient = (tensor_power(Hh, omega) - base) / h
        out.append(spectral_norm(quotient - deriv))
    return out


def derivative_check(A, B, omega, m=1, n=1, t0=0.5, h_grid=(1e-4, 1e-5)) -> float:
    """Largest residual of :func:`derivative_residuals` over ``h_grid``."""
    return max(derivative_residuals(A, B, omega, m, n, t0, h_grid))


# convergence in mean


@dataclass(frozen=True)
class MeanConvergenceReport:
    n_grid: list
    mean_gap: list
    stderr: list
    decay_exponent: Optional[float]  # fitted p in gap ~ C n^(-p)
    threshold: float
    final_below_threshold: bool

    def to_dict(self) -> dict:
        d = asdict(self)
        d["schema_version"] = SCHEMA_VERSION
        d["kind"] = "mean_convergence"
        return d


def mean_convergence_check(
    sequence: Callable[[int, DenseTensor, np.random.Generator], DenseTensor],
    target_cfg: SamplerConfig,
    trials: int = 100,
    n_grid: Sequence[int] = (1, 10, 100, 1000),
    threshold: float = 1e-2,
) -> MeanConvergenceReport:
    """Estimate ``E||X_n - X||`` along ``n_grid``.

    Each trial draws a target ``X`` from ``target_cfg`` and calls
    ``sequence(n, X, rng)`` for every ``n``; ``rng`` is that trial's private
    generator, so fresh noise per ``n`` is allowed.
    """

    def one(trial):
        X = sample(target_cfg, target_cfg.rng(STREAM_A, trial))
        rng = target_cfg.rng(STREAM_SEQUENCE, trial)
        out = []
        for n in n_grid:
            Xn = sequence(int(n), X, rng)
            if Xn.shape != X.shape:
                raise DimensionError(f"sequence produced shape {Xn.shape}, target has {X.shape}")
            out.append(spectral_norm(Xn - X))
        return out

    rows = _run_trials(one, trials, 1)
    means, ses = [], []
    for k in range(len(n_grid)):
        m, s = _mean_se([r[k] for r in rows])
        means.append(m)
        ses.append(s)
    pos = [k for k, v in enumerate(means) if v > 0]
    decay = None
    if len(pos) >= 2:
        decay = float(-np.polyfit(np.log([n_grid[k] for k in pos]), np.log([means[k] for k in pos]), 1)[0])
    return MeanConvergenceReport(list(map(int, n_grid)), means, ses, decay, threshold, bool(means[-1] <= threshold))


# serialization


def dumps(doc: dict) -> str:
    """Canonical JSON: sorted keys, fixed separators, no NaN or infinity."""
    return json.dumps(_clean(doc), sort_keys=True, indent=2, allow_nan=False) + "\n"


def _clean(obj):
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else None
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def rows_to_csv(rows: list[dict]) -> str:
    if not rows:
        return ""
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=list(rows[0]), lineterminator="\n")
    writer.writeheader()
    for row in rows:
        writer.writerow({k: ("" if v is None else v) for k, v in row.items()})
    return buf.getvalue()
