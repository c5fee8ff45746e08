"""Verification checks with their pass thresholds.

Each check draws its own seeded instances, compares the implementation with
an independent route, and returns a :class:`CheckResult`. The CLI ``verify``
command runs all of them and the acceptance tests call them at full size.
"""

from __future__ import annotations

import math
import time
from dataclasses import asdict, dataclass, field
from typing import Callable, Optional

import numpy as np

from . import bounds
from .harness import (
    SamplerConfig,
    convergence_experiment,
    derivative_residuals,
    gaussian_symbol,
    sample,
    sample_hermitian,
    tail_bound_experiment,
    trial_rng,
)
from .operators import (
    BivariateSymbol,
    Perturbation,
    fourier_representation,
    homomorphism_residual,
    kernel_zero_residual,
    norm_estimate_ratio,
    pdti_apply_quadrature,
    pdti_apply_spectral,
    perturbation_residual,
    power_ratio_symbol,
)
from .spectral import eigendecompose
from .tensor import DenseTensor, Shape, fold, random_tensor, spectral_norm, trace

__all__ = ["CheckResult", "CHECKS", "run_all", "BOUND_CATALOG"]

DEFAULT_SHAPE = Shape((2, 2))


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    metric: float
    tolerance: float
    detail: dict = field(default_factory=dict)
    seconds: float = 0.0

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return f"[{status}] {self.name}: metric={self.metric:.3e} tolerance={self.tolerance:.1e} ({self.seconds:.2f}s)"

    def to_dict(self, timing: bool = False) -> dict:
        d = asdict(self)
        if not timing:
            d.pop("seconds")
        return d


def _timed(fn):
    def wrapper(*args, **kwargs):
        t = time.perf_counter()
        res = fn(*args, **kwargs)
        return CheckResult(res.name, res.passed, res.metric, res.tolerance, res.detail, time.perf_counter() - t)

    wrapper.__name__ = fn.__name__
    wrapper.__doc__ = fn.__doc__
    return wrapper


def _rng(seed: int, check: int, i: int) -> np.random.Generator:
    return trial_rng(seed, 1000 + check, i)


def _einsum_product(X: DenseTensor, Y: DenseTensor) -> np.ndarray:
    """Einstein product straight from index notation, without unfolding."""
    n = X.shape.order
    letters = "abcdefghijklmnopqrstuvwxyz"
    i, k, j = letters[:n], letters[n : 2 * n], letters[2 * n : 3 * n]
    return np.einsum(f"{i}{k},{k}{j}->{i}{j}", X.data, Y.data)


@_timed
def algebra(seed: int = 0, count: int = 200, shape: Shape = DEFAULT_SHAPE) -> CheckResult:
    """Associativity, unfolding homomorphism, trace cyclicity, submultiplicativity."""
    worst = {"associativity": 0.0, "homomorphism": 0.0, "trace_cyclic": 0.0, "submultiplicative": 0.0}
    for i in range(count):
        rng = _rng(seed, 0, i)
        X, Y, Z = (random_tensor(shape, rng) for _ in range(3))
        nx, ny, nz = spectral_norm(X), spectral_norm(Y), spectral_norm(Z)
        assoc = spectral_norm((X @ Y) @ Z - X @ (Y @ Z)) / (nx * ny * nz)
        XY = X @ Y
        hom = np.max(np.abs(XY.data - _einsum_product(X, Y))) / (nx * ny)
        cyc = abs(trace(XY) - trace(Y @ X)) / (shape.total * nx * ny)
        sub = max(0.0, spectral_norm(XY) / (nx * ny) - 1.0)
        for key, v in zip(worst, (assoc, hom, cyc, sub)):
            worst[key] = max(worst[key], float(v))
    metric = max(worst.values())
    return CheckResult("algebra", metric <= 1e-12, metric, 1e-12, worst)


@_timed
def eigendecomposition(seed: int = 0, count: int = 100, shape: Shape = DEFAULT_SHAPE) -> CheckResult:
    """Projection idempotence, orthogonality, completeness and reconstruction."""
    worst = {"idempotent": 0.0, "orthogonal": 0.0, "complete": 0.0, "reconstruct": 0.0}
    n = shape.total
    eye = np.eye(n)
    for i in range(count):
        H = sample_hermitian(SamplerConfig(shape, seed, "gaussian-hermitian"), _rng(seed, 1, i))
        d = eigendecompose(H)
        P = [p.unfold() for p in d.projections]
        idem = max(np.max(np.abs(p @ p - p)) for p in P)
        orth = max((np.max(np.abs(P[a] @ P[b])) for a in range(n) for b in range(n) if a != b), default=0.0)
        comp = np.max(np.abs(sum(P) - eye))
        rec = np.max(np.abs(sum(lam * p for lam, p in zip(d.eigenvalues, P)) - H.unfold())) / spectral_norm(H)
        for key, v in zip(worst, (idem, orth, comp, rec)):
            worst[key] = max(worst[key], float(v))
    metric = max(worst.values())
    return CheckResult("eigendecomposition", metric <= 1e-10, metric, 1e-10, worst)


def vanishing_polynomial_symbol(sp_a: np.ndarray, rng: np.random.Generator) -> BivariateSymbol:
    """``prod_i (a - sp_a[i]) * q(b)`` with a random quadratic ``q``."""
    coeffs = np.poly(sp_a)
    q = rng.standard_normal(3)
    return BivariateSymbol(lambda a, b: np.polyval(coeffs, a) * np.polyval(q, b), name="vanishing")


@_timed
def kernel_zero(seed: int = 0, count: int = 50, shape: Shape = DEFAULT_SHAPE) -> CheckResult:
    """``Tr(T_psi(X) Y)`` for symbols vanishing on ``Sp(A) x Sp(B)``."""
    cfg = SamplerConfig(shape, seed, "gaussian-hermitian")
    worst = 0.0
    for i in range(count):
        rng = _rng(seed, 2, i)
        A, B = sample(cfg, rng), sample(cfg, rng)
        X, Y = random_tensor(shape, rng), random_tensor(shape, rng)
        dA, dB = eigendecompose(A), eigendecompose(B)
        psi = vanishing_polynomial_symbol(dA.eigenvalues, rng)
        worst = max(worst, abs(kernel_zero_residual(psi, dA, dB, X, Y)))
    return CheckResult("kernel_zero", worst <= 1e-9, worst, 1e-9)


def catalog_cycle():
    return [
        ("heinz", bounds.heinz_g(1, 0.25), (0.25, 0.5, 0.25, "minus", 1, 1)),
        ("heinz_plus", bounds.heinz_plus_g(1, 0.25), (0.25, 0.5, 0.25, "plus", 1, 1)),
        ("bks", bounds.bks_g(0.3), (0.35, 0.3, 0.35, "minus", 1, 1)),
        ("interp", bounds.interp_g(0.2, 0.6), (0.2, 0.4, 0.4, "minus", 1, 1)),
        ("interp_plus", bounds.interp_g(0.5, 0.5, "plus"), (0.25, 0.5, 0.25, "plus", 1, 1)),
        ("heinz_m2", bounds.heinz_g(1, 0.25), (0.25, 0.5, 0.25, "minus", 2, 2)),
    ]


@_timed
def norm_estimate(seed: int = 0, count: int = 50, shape: Shape = DEFAULT_SHAPE) -> CheckResult:
    """``||T(X)|| <= total^2 * (norm estimate) * ||X||`` for Fourier representations."""
    cfg = SamplerConfig(shape, seed, "positive-definite", (0.5, 2.0))
    entries = catalog_cycle()
    reps = {}
    violations = 0
    ratios = []
    for i in range(count):
        label, g, (_, _, _, _, gp, kp) = entries[i % len(entries)]
        if label not in reps:
            reps[label] = fourier_representation(g, t_max=max(gp, kp) * math.log(4.0), gamma_power=gp, kappa_power=kp)
        rng = _rng(seed, 3, i)
        A, B, X = sample(cfg, rng), sample(cfg, rng), random_tensor(shape, rng)
        r = norm_estimate_ratio(reps[label], eigendecompose(A), eigendecompose(B), X)
        ratios.append(r)
        violations += r > 1.0
    return CheckResult("norm_estimate", violations == 0, float(violations), 0.0, {"max_ratio": max(ratios)})


BOUND_CATALOG: list[Callable[[], bounds.GFunction]] = [
    lambda: bounds.heinz_g(1, 0.25),
    lambda: bounds.heinz_g(2, 0.5),
    lambda: bounds.heinz_plus_g(1, 0.25),
    lambda: bounds.heinz_plus_g(1, 0.5),
    lambda: bounds.commutator_g(0.5, 0.5, 0.5),
    lambda: bounds.bks_g(0.3),
    lambda: bounds.bks_g(0.5),
    lambda: bounds.bks_g(0.7),
    lambda: bounds.interp_g(0.5, 0.5, "minus"),
    lambda: bounds.interp_g(0.5, 0.5, "plus"),
    lambda: bounds.interp_g(0.2, 0.6, "minus"),
]


@_timed
def bound_optimum(seed: int = 0) -> CheckResult:
    """Closed-form optimum against a 60-point log grid over ``c``; Gaussian L2 norm."""
    cs = np.logspace(-3, 3, 60)
    rows = []
    worst = 0.0
    for make in BOUND_CATALOG:
        g = make()
        b = bounds.fourier_l1_bound(g)
        grid = np.sqrt(2 * cs) * b.l2_g + np.sqrt(2 / cs) * b.l2_gprime
        rel = abs(grid.min() - b.value) / b.value
        worst = max(worst, rel)
        rows.append({"label": g.label, "params": g.params, "bound": b.value, "grid_min": float(grid.min()), "rel": rel})
    gauss = bounds.l2_norm_on_line(bounds.gaussian_profile().eval)
    gauss_err = abs(gauss - math.pi**0.25)
    passed = worst <= 1e-3 and gauss_err <= 1e-8
    return CheckResult("bound_optimum", passed, worst, 1e-3, {"entries": rows, "gaussian_l2_error": gauss_err})


def _random_smooth_symbol(rng: np.random.Generator) -> BivariateSymbol:
    kind = rng.integers(3)
    c = rng.standard_normal(4) * 0.5
    if kind == 0:
        return BivariateSymbol(lambda a, b: c[0] + c[1] * a + c[2] * b + c[3] * a * b, name="bilinear")
    if kind == 1:
        return BivariateSymbol(lambda a, b: np.exp(c[0] * a) * np.cos(c[1] * b), name="exp_cos")
    return BivariateSymbol(lambda a, b: 1.0 / (1.0 + (a - c[2] * b) ** 2), name="lorentz")


@_timed
def homomorphism(seed: int = 0, count: int = 100, shape: Shape = DEFAULT_SHAPE) -> CheckResult:
    """``T_{psi1 psi2} = T_{psi1} T_{psi2}``."""
    cfg = SamplerConfig(shape, seed, "gaussian-hermitian")
    worst = 0.0
    for i in range(count):
        rng = _rng(seed, 4, i)
        psi1, psi2 = _random_smooth_symbol(rng), _random_smooth_symbol(rng)
        A, B, X = sample(cfg, rng), sample(cfg, rng), random_tensor(shape, rng)
        worst = max(worst, homomorphism_residual(psi1, psi2, eigendecompose(A), eigendecompose(B), X))
    return CheckResult("homomorphism", worst <= 1e-10, worst, 1e-10)


_F = {
    "exp": (np.exp, np.exp),
    "square": (lambda x: x**2, lambda x: 2 * x),
    "lorentz": (lambda x: 1 / (1 + x**2), lambda x: -2 * x / (1 + x**2) ** 2),
}
_GH = [lambda x: 1 + x**2, np.exp, np.cosh, lambda x: 2 + np.sin(x)]


def random_perturbation(rng: np.random.Generator, sign: str) -> Perturbation:
    fname = list(_F)[rng.integers(len(_F))]
    f, fp = _F[fname]
    g_a, g_b, h_a, h_b = (_GH[k] for k in rng.integers(len(_GH), size=4))
    expo = [int(v) for v in rng.integers(1, 3, size=6)]
    return Perturbation(f, g_a, g_b, h_a, h_b, *expo, sign=sign, fprime=fp)


@_timed
def perturbation(seed: int = 0, count: int = 100, shape: Shape = DEFAULT_SHAPE) -> CheckResult:
    """Two-path check of ``H_A (F_A X -+ X F_B) H_B = T_psi(G_A (E_A^k X -+ X E_B^k) G_B)``."""
    herm = SamplerConfig(shape, seed, "gaussian-hermitian")
    pd = SamplerConfig(shape, seed, "positive-definite", (0.5, 2.0))
    worst = 0.0
    per_sign = {"minus": 0.0, "plus": 0.0}
    for i in range(count):
        rng = _rng(seed, 5, i)
        sign = "minus" if i % 2 == 0 else "plus"
        p = random_perturbation(rng, sign)
        cfg = herm if sign == "minus" else pd
        EA, EB, X = sample(cfg, rng), sample(cfg, rng), random_tensor(shape, rng)
        r = perturbation_residual(p, EA, EB, X)
        worst = max(worst, r)
        per_sign[sign] = max(per_sign[sign], r)
    return CheckResult("perturbation", worst <= 1e-8, worst, 1e-8, per_sign)


@_timed
def spectral_vs_quadrature(seed: int = 0, count: int = 20, shape: Shape = DEFAULT_SHAPE) -> CheckResult:
    """Fourier discretization of the Heinz (m=1, w=1/4) symbol against the double sum."""
    lo, hi = 0.5, 2.0
    cfg = SamplerConfig(shape, seed, "positive-definite", (lo, hi))
    rep = fourier_representation(bounds.heinz_g(1, 0.25), t_max=math.log(hi / lo))
    psi = power_ratio_symbol(0.25, 0.5, 0.25, "minus")
    worst = 0.0
    for i in range(count):
        rng = _rng(seed, 6, i)
        A, B, X = sample(cfg, rng), sample(cfg, rng), random_tensor(shape, rng)
        dA, dB = eigendecompose(A), eigendecompose(B)
        gap = spectral_norm(pdti_apply_spectral(psi, dA, dB, X) - pdti_apply_quadrature(rep, dA, dB, X))
        worst = max(worst, gap / spectral_norm(X))
    detail = {"nodes": len(rep.nodes), "error_estimate": rep.error_estimate}
    return CheckResult("spectral_vs_quadrature", worst <= 1e-6, worst, 1e-6, detail)


@_timed
def continuity(seed: int = 0, trials: int = 200, shape: Shape = DEFAULT_SHAPE) -> CheckResult:
    """Mean operator gap along ``E_t = E_0 + t * direction`` shrinks with ``t``."""
    rep = convergence_experiment(
        gaussian_symbol(), SamplerConfig(shape, seed, "gaussian-hermitian"), t_grid=(1.0, 0.1, 0.01, 0.001), trials=trials
    )
    ratio = rep.final_ratio if rep.final_ratio is not None else math.inf
    return CheckResult(
        "continuity", rep.passed, ratio, 1e-2, {"mean_operator_gap": rep.mean_operator_gap, "strictly_decreasing": rep.strictly_decreasing}
    )


@_timed
def derivative(seed: int = 0, shape: Shape = DEFAULT_SHAPE, omegas=(0.3, 0.5, 0.7)) -> CheckResult:
    """Forward-difference residual of ``d/dt H_t^w``: small and first order in ``h``."""
    cfg = SamplerConfig(shape, seed, "positive-definite", (0.5, 2.0))
    rows = []
    ok = True
    worst = 0.0
    for k, w in enumerate(omegas):
        rng = _rng(seed, 7, k)
        A, B = sample(cfg, rng), sample(cfg, rng)
        r4, r5 = derivative_residuals(A, B, w, 1, 1, 0.5, (1e-4, 1e-5))
        ratio = r4 / r5 if r5 > 0 else math.inf
        ok &= r5 <= 1e-4 and 3 <= ratio <= 30
        worst = max(worst, r5)
        rows.append({"omega": w, "residual_1e-4": r4, "residual_1e-5": r5, "ratio": ratio})
    return CheckResult("derivative", bool(ok), worst, 1e-4, {"rows": rows})


@_timed
def per_sample_chains(seed: int = 0, trials: int = 1000, shape: Shape = DEFAULT_SHAPE) -> CheckResult:
    """Pre-Markov inequalities for the Heinz and power-difference statements, sample by sample."""
    cfg = SamplerConfig(shape, seed)
    detail = {}
    total = 0
    for name, params in (("thm5", {"m": 1, "omega": 0.25}), ("thm7", {"omega": 0.5, "m": 1, "n": 1})):
        r = tail_bound_experiment(name, params, cfg, trials=trials)
        detail[name] = r.chain
        total += r.chain["violations"]
    return CheckResult("per_sample_chains", total == 0, float(total), 0.0, detail)


TAIL_CASES = [
    ("thm5", {"m": 1, "omega": 0.25}),
    ("cor4", {"m": 1, "omega": 0.25}),
    ("thm6", {"nu": 0.5, "r0": 0.5, "r1": 0.5}),
    ("thm7", {"omega": 0.5, "m": 1, "n": 1}),
    ("thm8", {"alpha": 0.5, "beta": 0.5, "m": 1, "n": 1}),
    ("cor5", {"alpha": 0.5, "beta": 0.5, "m": 1, "n": 1}),
]


@_timed
def tail_dominance(seed: int = 0, trials: int = 2000, shape: Shape = DEFAULT_SHAPE) -> CheckResult:
    """Empirical tail upper confidence bound against the analytic right-hand side."""
    cfg = SamplerConfig(shape, seed)
    detail = {}
    undominated = 0
    for name, params in TAIL_CASES:
        r = tail_bound_experiment(name, params, cfg, trials=trials)
        bad = sum(1 for d in r.dominated if not d)
        undominated += bad
        detail[name] = {"undominated_thetas": bad, "markov_consistent": all(r.markov_consistent), "identity_residual": r.identity_residual}
    ok = undominated == 0 and all(v["markov_consistent"] for v in detail.values())
    return CheckResult("tail_dominance", ok, float(undominated), 0.0, detail)


@_timed
def determinism(seed: int = 0, trials: int = 200, shape: Shape = DEFAULT_SHAPE) -> CheckResult:
    """Same config, different worker counts, identical serialized reports."""
    cfg = SamplerConfig(shape, seed)
    docs = [tail_bound_experiment("thm7", None, cfg, trials=trials, workers=w).to_json() for w in (1, 1, 3)]
    same = len(set(docs)) == 1
    return CheckResult("determinism", same, 0.0 if same else 1.0, 0.0)


CHECKS: dict[str, Callable[..., CheckResult]] = {
    "algebra": algebra,
    "eigendecomposition": eigendecomposition,
    "kernel_zero": kernel_zero,
    "norm_estimate": norm_estimate,
    "bound_optimum": bound_optimum,
    "homomorphism": homomorphism,
    "perturbation": perturbation,
    "spectral_vs_quadrature": spectral_vs_quadrature,
    "continuity": continuity,
    "derivative": derivative,
    "per_sample_chains": per_sample_chains,
    "tail_dominance": tail_dominance,
    "determinism": determinism,
}


def run_all(seed: int = 0, shape: Shape = DEFAULT_SHAPE, trials: Optional[int] = None, only=None) -> list[CheckResult]:
    """Run every check; ``trials`` caps the Monte Carlo checks for quick runs."""
    out = []
    for name, fn in CHECKS.items():
        if only and name not in only:
            continue
        kwargs = {"seed": seed}
        if name != "bound_optimum":
            kwargs["shape"] = shape
        if trials is not None and name in ("continuity", "per_sample_chains", "tail_dominance", "determinism"):
            kwargs["trials"] = trials
        out.append(fn(**kwargs))
    return out
