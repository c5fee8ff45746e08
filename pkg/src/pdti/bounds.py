"""Upper bounds on symbol norms from integral-transform representations.

The catalog profiles all have the form

    g(t) = (exp(p t) + s exp(q t)) / (exp(c t) + s exp(-c t)),   s = +1 or -1,

so a single numerically stable evaluator covers every entry. For ``s = -1``
the removable singularity at ``t = 0`` is filled from the Taylor series.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy import integrate, optimize

from .errors import DivergenceError, EvaluationError, ParameterError

__all__ = [
    "GFunction",
    "BoundResult",
    "l2_norm_on_line",
    "l2_norm_with_error",
    "l1_bound_objective",
    "fourier_l1_bound",
    "gfunction_bound",
    "psi_norm_upper_kernel",
    "psi_norm_upper_fourier",
    "psi_norm_upper_shifted",
    "sup_norm",
    "heinz_g",
    "heinz_plus_g",
    "commutator_g",
    "bks_g",
    "interp_g",
    "gaussian_profile",
    "CATALOG",
]

SERIES_SWITCHOVER = 1e-6


@dataclass(frozen=True)
class GFunction:
    """A profile ``g(t)`` together with ``g'(t)``.

    ``integrable`` is ``None`` when square-integrability is not known in
    closed form; ``decay_rate`` (if known) bounds ``|g(t)| <= C exp(-rate |t|)``
    and ``strip`` is the half-width of the strip around the real axis on which
    ``g`` is analytic. Both steer the Fourier discretization.
    """

    label: str
    eval: Callable[[np.ndarray], np.ndarray]
    deriv: Callable[[np.ndarray], np.ndarray]
    params: dict = field(default_factory=dict)
    integrable: Optional[bool] = None
    decay_rate: Optional[float] = None
    strip: Optional[float] = None

    def __call__(self, t):
        return self.eval(t)


@dataclass(frozen=True)
class BoundResult:
    """Outcome of the optimized Fourier ``L^1`` estimate.

    ``value = sqrt(2 c*) ||g||_2 + sqrt(2 / c*) ||g'||_2``; non-integrable
    profiles carry ``value = inf`` and ``integrable = False``.
    """

    value: float
    c_star: float
    l2_g: float
    l2_gprime: float
    quadrature_error_estimate: float = 0.0
    integrable: bool = True
    label: str = ""
    params: dict = field(default_factory=dict)

    @property
    def vacuous(self) -> bool:
        return not math.isfinite(self.value)

    def to_record(self) -> dict:
        def finite(x):
            return float(x) if math.isfinite(x) else None

        return {
            "label": self.label,
            "params": dict(self.params),
            "l2_g": finite(self.l2_g),
            "l2_gprime": finite(self.l2_gprime),
            "c_star": finite(self.c_star),
            "bound": finite(self.value),
            "integrable": bool(self.integrable),
            "vacuous": self.vacuous,
            "quadrature_error_estimate": finite(self.quadrature_error_estimate),
        }


# quadrature on the real line


def l2_norm_with_error(
    f: Callable, window: float = 8.0, tol: float = 1e-10, max_doublings: int = 40
) -> tuple[float, float]:
    """``(||f||_2, error estimate)`` over the whole real line.

    The window ``[-L, L]`` doubles until the newly added shell contributes
    less than ``tol`` of the accumulated integral. Three consecutive
    doublings without a shrinking shell raise :class:`DivergenceError`.
    """

    def sq(t):
        v = f(t)
        return float(np.abs(v) ** 2)

    def piece(a, b):
        val, err = integrate.quad(sq, a, b, epsabs=0.0, epsrel=1e-13, limit=400)
        if not math.isfinite(val):
            raise DivergenceError(f"integrand is not finite on [{a}, {b}]")
        return val, err

    L = float(window)
    left, e1 = piece(-L, 0.0)
    right, e2 = piece(0.0, L)
    total, err = left + right, e1 + e2
    prev_shell = math.inf
    stalls = 0
    for _ in range(max_doublings):
        sl, el = piece(-2 * L, -L)
        sr, er = piece(L, 2 * L)
        shell = sl + sr
        total += shell
        err += el + er
        L *= 2
        if shell <= tol * total or total == 0.0:
            # remaining tail is at most comparable to the last shell
            err += shell
            return math.sqrt(total), err / (2 * math.sqrt(total)) if total > 0 else 0.0
        stalls = stalls + 1 if shell >= prev_shell else 0
        if stalls >= 3:
            raise DivergenceError(
                f"tail of the integral does not shrink (shell mass {shell:.3e} at |t| ~ {L:g})"
            )
        prev_shell = shell
    raise DivergenceError(f"no convergence within |t| <= {L:g}")


def l2_norm_on_line(f: Callable, window: float = 8.0, tol: float = 1e-10) -> float:
    return l2_norm_with_error(f, window=window, tol=tol)[0]


def l1_bound_objective(c, l2_g, l2_gprime):
    """``sqrt(2c) ||g||_2 + sqrt(2/c) ||g'||_2`` for scalar or array ``c``."""
    c = np.asarray(c, dtype=float)
    return np.sqrt(2 * c) * l2_g + np.sqrt(2 / c) * l2_gprime


def fourier_l1_bound(g: GFunction) -> BoundResult:
    """Closed-form minimum over ``c > 0`` of the Fourier ``L^1`` estimate.

    The minimizer is ``c* = ||g'||_2 / ||g||_2`` with value
    ``2 sqrt(2 ||g||_2 ||g'||_2)``. Propagates :class:`DivergenceError`.
    """
    a, ea = l2_norm_with_error(g.eval)
    b, eb = l2_norm_with_error(g.deriv)
    if a == 0.0:
        if b > 0.0:
            raise EvaluationError(f"{g.label}: ||g||_2 = 0 but ||g'||_2 = {b:.3e}")
        return BoundResult(0.0, 1.0, 0.0, 0.0, 0.0, True, g.label, dict(g.params))
    if b == 0.0:
        # only constants have g' = 0, and those are caught as divergent
        raise EvaluationError(f"{g.label}: ||g'||_2 = 0 with ||g||_2 = {a:.3e}")
    c_star = b / a
    value = float(l1_bound_objective(c_star, a, b))
    # d(value)/da = sqrt(2b/a), d(value)/db = sqrt(2a/b)
    err = math.sqrt(2 * b / a) * ea + math.sqrt(2 * a / b) * eb
    return BoundResult(value, c_star, a, b, err, True, g.label, dict(g.params))


def gfunction_bound(g: GFunction) -> BoundResult:
    """Like :func:`fourier_l1_bound` but returns a flagged infinite bound
    for profiles that are not square-integrable."""
    if g.integrable is False:
        return BoundResult(math.inf, math.nan, math.inf, math.inf, 0.0, False, g.label, dict(g.params))
    try:
        return fourier_l1_bound(g)
    except DivergenceError:
        return BoundResult(math.inf, math.nan, math.inf, math.inf, 0.0, False, g.label, dict(g.params))


def psi_norm_upper_fourier(g: GFunction) -> float:
    return fourier_l1_bound(g).value


def psi_norm_upper_shifted(g: GFunction, alpha: float, gamma_star: float, kappa_star: float) -> float:
    """Shifted-transform bound: ``gamma^alpha(lambda*) kappa^-alpha(lambda*)`` times
    the Fourier estimate. The suprema are supplied by the caller."""
    if gamma_star <= 0 or kappa_star <= 0:
        raise ParameterError("suprema must be positive")
    base = psi_norm_upper_fourier(g)
    if alpha == 0:
        return base
    return gamma_star * kappa_star * base


def psi_norm_upper_kernel(
    K: Callable,
    gtilde: Callable,
    cA: float,
    cB: float,
    g_sup: float,
    s_range: tuple[float, float],
    t_range: tuple[float, float] = (-50.0, 50.0),
    kernel_sup: Optional[Callable] = None,
    n_s: int = 4001,
    n_t: int = 2001,
) -> float:
    """``cA cB (int max_t |K(s, t)| ds) ||g||_inf`` with the ``s``-integral taken
    over the support of ``gtilde`` inside ``s_range``.

    ``kernel_sup(s)`` may supply ``max_t |K(s, t)|`` in closed form; otherwise
    it is taken over a grid on ``t_range``.
    """
    lo, hi = s_range
    if not (math.isfinite(lo) and math.isfinite(hi)) or hi <= lo:
        raise DivergenceError(f"s-range {s_range} must be a finite interval")
    s = np.linspace(lo, hi, n_s)
    gt = np.abs(np.asarray([gtilde(x) for x in s], dtype=complex))
    support = gt > 0
    if not support.any():
        return 0.0
    if kernel_sup is not None:
        ksup = np.asarray([kernel_sup(x) for x in s], dtype=float)
    else:
        t = np.linspace(*t_range, n_t)
        ksup = np.array([np.max(np.abs(K(x, t))) for x in s])
    integrand = np.where(support, ksup, 0.0)
    mass = integrate.trapezoid(integrand, s)
    if not math.isfinite(mass):
        raise DivergenceError("kernel integral diverges")
    return float(cA * cB * mass * g_sup)


def sup_norm(g: GFunction, t_max: Optional[float] = None) -> float:
    """``sup_t |g(t)|`` by a grid bracket refined with golden-section search,
    plus the limits at ``t -> +-inf``."""
    if t_max is None:
        t_max = 60.0 if not g.decay_rate else min(max(40.0 / g.decay_rate, 20.0), 2000.0)
    t = np.linspace(-t_max, t_max, 20001)
    vals = np.abs(g.eval(t))
    k = int(np.argmax(vals))
    best = float(vals[k])
    lo, hi = t[max(k - 1, 0)], t[min(k + 1, len(t) - 1)]
    res = optimize.minimize_scalar(
        lambda x: -abs(float(g.eval(np.array([x]))[0])),
        bracket=(lo, t[k], hi) if 0 < k < len(t) - 1 else None,
        bounds=None,
        method="golden",
        options={"xtol": 1e-10},
    )
    best = max(best, -float(res.fun))
    tails = np.abs(g.eval(np.array([-1e4, 1e4])))
    return float(max(best, *tails))


# catalog profiles


def _exp_ratio(p: float, q: float, c: float, sign: int):
    """Stable evaluators for ``(e^{pt} + s e^{qt}) / (e^{ct} + s e^{-ct})``."""
    s = float(sign)
    n1, n2, n3 = ((p**k - q**k) / math.factorial(k) for k in range(1, 4))

    def _parts(t):
        pos = t >= 0
        # t >= 0: divide through by e^{ct}; t < 0: multiply through by e^{ct}
        a = np.where(pos, p - c, p + c)
        b = np.where(pos, q - c, q + c)
        num = np.exp(a * t) + s * np.exp(b * t)
        den = np.where(pos, 1 + s * np.exp(-2 * c * t), np.exp(2 * c * t) + s)
        if sign < 0:
            near = np.abs(t) < 1
            tn = np.where(near, t, 0.0)
            num = np.where(near, np.exp(b * tn) * np.expm1((p - q) * tn), num)
            den = np.where(near, np.where(pos, -np.expm1(-2 * c * tn), np.expm1(2 * c * tn)), den)
        dnum = a * np.exp(a * t) + s * b * np.exp(b * t)
        dden = np.where(pos, -2 * c * s * np.exp(-2 * c * t), 2 * c * np.exp(2 * c * t))
        return num, den, dnum, dden

    def g(t):
        t = np.asarray(t, dtype=float)
        tt = np.atleast_1d(t)
        with np.errstate(all="ignore"):
            num, den, _, _ = _parts(tt)
            out = num / den
            if sign < 0:
                series = (n1 + n2 * tt + n3 * tt**2) / (2 * c + c**3 * tt**2 / 3)
                out = np.where(np.abs(tt) < SERIES_SWITCHOVER, series, out)
        return out.reshape(t.shape)

    def dg(t):
        t = np.asarray(t, dtype=float)
        tt = np.atleast_1d(t)
        with np.errstate(all="ignore"):
            num, den, dnum, dden = _parts(tt)
            out = (dnum * den - num * dden) / den**2
            if sign < 0:
                series = (n2 + 2 * n3 * tt) / (2 * c) - n1 * (2 * c**3 / 3) * tt / (2 * c) ** 2
                out = np.where(np.abs(tt) < SERIES_SWITCHOVER, series, out)
        return out.reshape(t.shape)

    if sign < 0 and p == q:
        integrable, rate = True, math.inf
    else:
        integrable = max(p, q) < c and min(p, q) > -c
        rate = min(c - max(p, q), c + min(p, q)) if integrable else 0.0
    strip = math.pi / c if sign < 0 else math.pi / (2 * c)
    return g, dg, integrable, rate, strip


def _profile(label, params, p, q, c, sign):
    g, dg, integrable, rate, strip = _exp_ratio(p, q, c, sign)
    return GFunction(label, g, dg, params, integrable, rate, strip)


def heinz_g(m: int, omega: float) -> GFunction:
    """``sinh((m - 2 omega) t / 2) / sinh(m t / 2)``; equals ``(m - 2 omega)/m`` at 0."""
    if m < 1 or not 0 <= omega <= m:
        raise ParameterError(f"need m >= 1 and 0 <= omega <= m, got m={m}, omega={omega}")
    p = (m - 2 * omega) / 2
    return _profile("heinz", {"m": m, "omega": omega}, p, -p, m / 2, -1)


def heinz_plus_g(m: int, omega: float) -> GFunction:
    """``cosh((m - 2 omega) t / 2) / cosh(m t / 2)``."""
    if m < 1 or not 0 <= omega <= m:
        raise ParameterError(f"need m >= 1 and 0 <= omega <= m, got m={m}, omega={omega}")
    p = (m - 2 * omega) / 2
    return _profile("heinz_plus", {"m": m, "omega": omega}, p, -p, m / 2, +1)


def commutator_g(nu: float, r0: float, r1: float) -> GFunction:
    if not 0 <= nu <= 1:
        raise ParameterError(f"nu must lie in [0, 1], got {nu}")
    if r0 < 0 or r1 < 0 or not math.isclose(r0 + r1, 1.0, rel_tol=0, abs_tol=1e-12):
        raise ParameterError(f"need r0, r1 >= 0 with r0 + r1 = 1, got r0={r0}, r1={r1}")
    p = (1 - 2 * r1 * nu) / 2
    q = (2 * r0 * nu - 1) / 2
    return _profile("commutator", {"nu": nu, "r0": r0, "r1": r1}, p, q, 0.5, -1)


def bks_g(omega: float) -> GFunction:
    """``sinh(omega t / 2) / sinh(t / 2)``; square-integrable for ``0 < omega < 1``."""
    if not 0 <= omega <= 1:
        raise ParameterError(f"omega must lie in [0, 1], got {omega}")
    return _profile("bks", {"omega": omega}, omega / 2, -omega / 2, 0.5, -1)


def interp_g(alpha: float, beta: float, sign: str = "minus") -> GFunction:
    if not (0 <= alpha <= 1 and 0 <= beta <= 1):
        raise ParameterError(f"alpha, beta must lie in [0, 1], got {alpha}, {beta}")
    if sign not in ("minus", "plus"):
        raise ParameterError(f"sign must be 'minus' or 'plus', got {sign!r}")
    s = -1 if sign == "minus" else 1
    label = "interp" if sign == "minus" else "interp_plus"
    return _profile(label, {"alpha": alpha, "beta": beta}, alpha / 2, -beta / 2, 0.5, s)


def gaussian_profile() -> GFunction:
    """``exp(-t^2 / 2)``, whose ``L^2`` norm is ``pi^(1/4)``."""
    return GFunction(
        "gaussian",
        lambda t: np.exp(-np.asarray(t, dtype=float) ** 2 / 2),
        lambda t: -np.asarray(t, dtype=float) * np.exp(-np.asarray(t, dtype=float) ** 2 / 2),
        {},
        True,
        None,
        math.inf,
    )


CATALOG = {
    "heinz": heinz_g,
    "heinz_plus": heinz_plus_g,
    "commutator": commutator_g,
    "bks": bks_g,
    "interp": lambda alpha, beta: interp_g(alpha, beta, "minus"),
    "interp_plus": lambda alpha, beta: interp_g(alpha, beta, "plus"),
}
