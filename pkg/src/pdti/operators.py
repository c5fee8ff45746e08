"""Double tensor integrals ``T_psi`` and the identities they satisfy.

Two ways to apply ``T_psi`` are provided:

* spectral: ``sum_{i,j} psi(a_i, b_j) P_{A,i} * X * P_{B,j}``, evaluated as
  ``V_A (Psi o (V_A^H X V_B)) V_B^H`` on the unfoldings;
* quadrature: ``sum_k w_k F_{A,k} * X * F_{B,k}`` with
  ``F_{A,k} = sum_i f_A(s_k, a_i) P_{A,i}``, built node by node.

The two routes share nothing beyond the eigendecompositions, so each checks
the other.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Optional, Sequence, Union

import numpy as np

from .bounds import GFunction
from .errors import DimensionError, EvaluationError, ParameterError, SingularSymbolError
from .spectral import EigenDecomposition, apply_scalar_function, eigendecompose, evaluate_on_spectrum
from .tensor import DenseTensor, fold, spectral_norm

__all__ = [
    "DD_TOL",
    "BivariateSymbol",
    "FactorizedRepresentation",
    "PdtiOperator",
    "Perturbation",
    "pdti_apply_spectral",
    "pdti_apply_quadrature",
    "divided_difference",
    "divided_difference_array",
    "symbol_product",
    "make_perturbation_symbol",
    "power_ratio_symbol",
    "homomorphism_residual",
    "kernel_zero_residual",
    "perturbation_residual",
    "norm_estimate_ratio",
    "fourier_representation",
    "constant_symbol",
]

DD_TOL = 1e-9
SUPPORT_TOL = 1e-12


# divided differences


def divided_difference(f: Callable, fprime: Optional[Callable], a: float, b: float, tol: float = DD_TOL) -> float:
    """``(f(a) - f(b)) / (a - b)``, or ``f'`` at the midpoint when ``a`` and
    ``b`` agree to ``tol`` relative. Without ``fprime`` a central difference
    with step ``tol ** (1/3)`` stands in for the derivative."""
    if abs(a - b) > tol * max(1.0, abs(a), abs(b)):
        return (f(a) - f(b)) / (a - b)
    mid = 0.5 * (a + b)
    if fprime is not None:
        return fprime(mid)
    h = tol ** (1 / 3)
    return (f(mid + h) - f(mid - h)) / (2 * h)


def divided_difference_array(f, fprime, u, v, tol: float = DD_TOL) -> np.ndarray:
    """Broadcasting version of :func:`divided_difference`."""
    u, v = np.broadcast_arrays(np.asarray(u, dtype=float), np.asarray(v, dtype=float))
    diff = u - v
    close = np.abs(diff) <= tol * np.maximum(1.0, np.maximum(np.abs(u), np.abs(v)))
    with np.errstate(all="ignore"):
        safe = np.where(close, 1.0, diff)
        out = (np.asarray(f(u), dtype=complex) - np.asarray(f(v), dtype=complex)) / safe
    if np.any(close):
        mid = 0.5 * (u + v)
        if fprime is not None:
            d = np.asarray(fprime(mid), dtype=complex)
        else:
            h = tol ** (1 / 3)
            d = (np.asarray(f(mid + h), dtype=complex) - np.asarray(f(mid - h), dtype=complex)) / (2 * h)
        out = np.where(close, d, out)
    return out


# symbols


def _in_set(x: np.ndarray, values: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    gap = np.min(np.abs(x[..., None] - values), axis=-1)
    return gap <= SUPPORT_TOL * np.maximum(1.0, np.abs(x))


@dataclass(frozen=True)
class BivariateSymbol:
    """Scalar function ``psi(a, b)`` of an eigenvalue pair.

    ``func`` must broadcast over numpy arrays. When ``support`` is given as
    ``(Sp_A, Sp_B)`` the symbol is zero off ``Sp_A x Sp_B``. ``dd_tol`` is
    the divided-difference threshold used by the constructors below.
    """

    func: Callable[[np.ndarray, np.ndarray], np.ndarray]
    support: Optional[tuple[np.ndarray, np.ndarray]] = None
    name: str = "psi"
    dd_tol: float = DD_TOL

    def __call__(self, a, b):
        a = np.asarray(a, dtype=float)
        b = np.asarray(b, dtype=float)
        with np.errstate(all="ignore"):
            out = np.asarray(self.func(a, b), dtype=complex)
        out = np.broadcast_to(out, np.broadcast(a, b).shape)
        if self.support is not None:
            spa, spb = self.support
            mask = _in_set(a, np.asarray(spa)) & _in_set(b, np.asarray(spb))
            out = np.where(np.broadcast_to(mask, out.shape), out, 0.0)
        return out

    def matrix(self, lam_a: np.ndarray, lam_b: np.ndarray) -> np.ndarray:
        """``Psi[i, j] = psi(lam_a[i], lam_b[j])``, checked for finiteness."""
        Psi = np.array(self(lam_a[:, None], lam_b[None, :]), dtype=complex)
        if not np.all(np.isfinite(Psi)):
            i, j = np.argwhere(~np.isfinite(Psi))[0]
            raise EvaluationError(f"{self.name} is not finite at ({lam_a[i]!r}, {lam_b[j]!r})")
        return Psi

    def __mul__(self, other: "BivariateSymbol") -> "BivariateSymbol":
        return symbol_product(self, other)


def constant_symbol(value: complex) -> BivariateSymbol:
    return BivariateSymbol(lambda a, b: np.full(np.broadcast(a, b).shape, value, dtype=complex), name=f"const({value})")


def symbol_product(psi1: BivariateSymbol, psi2: BivariateSymbol) -> BivariateSymbol:
    """Pointwise product; each factor keeps its own support."""
    return BivariateSymbol(
        lambda a, b: psi1(a, b) * psi2(a, b),
        name=f"({psi1.name})*({psi2.name})",
        dd_tol=min(psi1.dd_tol, psi2.dd_tol),
    )


def _pos_power(x, p):
    x = np.asarray(x, dtype=float)
    if np.any(x <= 0):
        raise EvaluationError(f"power {p} needs a positive argument, got min {np.min(x):.3e}")
    return x**p


def power_ratio_symbol(
    p: float,
    r: float,
    q: float,
    sign: str = "minus",
    gamma_power: float = 1.0,
    kappa_power: float = 1.0,
    name: str = "power_ratio",
    tol: float = DD_TOL,
) -> BivariateSymbol:
    """``u^p * (u^r -+ v^r) / (u -+ v) * v^q`` with ``u = a^gamma_power``,
    ``v = b^kappa_power``; positive eigenvalues only.

    Every inequality-generating symbol in the catalog has this shape. In the
    minus case the divided difference of ``x^r`` falls back to ``r u^(r-1)``
    when ``u`` and ``v`` coincide.
    """
    if sign not in ("minus", "plus"):
        raise ParameterError(f"sign must be 'minus' or 'plus', got {sign!r}")

    def func(a, b):
        u = _pos_power(a, gamma_power)
        v = _pos_power(b, kappa_power)
        if sign == "minus":
            dd = divided_difference_array(lambda x: x**r, lambda x: r * x ** (r - 1), u, v, tol)
        else:
            dd = (u**r + v**r) / (u + v)
        return u**p * dd * v**q

    return BivariateSymbol(func, name=name, dd_tol=tol)


# factorized representations


@dataclass(frozen=True)
class FactorizedRepresentation:
    """Discretized ``psi(a, b) = sum_k w_k fA(s_k, a) fB(s_k, b)``.

    ``fA`` and ``fB`` broadcast over ``(nodes[:, None], lam[None, :])``.
    ``sup_a[k]`` and ``sup_b[k]`` bound ``sup_x |fA(s_k, x)|`` and
    ``sup_x |fB(s_k, x)|``; they default to 1 (unimodular factors).
    ``error_estimate`` bounds ``|psi - sum_k ...|`` on the intended domain.
    """

    nodes: np.ndarray
    weights: np.ndarray
    fA: Callable
    fB: Callable
    sup_a: Optional[np.ndarray] = None
    sup_b: Optional[np.ndarray] = None
    error_estimate: float = 0.0
    name: str = "rep"

    def __post_init__(self):
        nodes = np.asarray(self.nodes, dtype=float)
        weights = np.asarray(self.weights, dtype=float)
        if nodes.shape != weights.shape or nodes.ndim != 1:
            raise DimensionError("nodes and weights must be 1-d arrays of equal length")
        if np.any(weights < 0) or not np.all(np.isfinite(weights)):
            raise ParameterError("weights must be finite and nonnegative")
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "weights", weights)

    @property
    def norm_estimate(self) -> float:
        """``sum_k w_k sup|fA(s_k, .)| sup|fB(s_k, .)|``, an upper bound for the
        symbol norm carried by this representation."""
        sa = np.ones_like(self.weights) if self.sup_a is None else np.asarray(self.sup_a)
        sb = np.ones_like(self.weights) if self.sup_b is None else np.asarray(self.sup_b)
        return float(np.sum(self.weights * sa * sb))

    def factor_values(self, lam_a, lam_b):
        s = self.nodes[:, None]
        with np.errstate(all="ignore"):
            fa = np.asarray(self.fA(s, np.asarray(lam_a)[None, :]), dtype=complex)
            fb = np.asarray(self.fB(s, np.asarray(lam_b)[None, :]), dtype=complex)
        fa = np.broadcast_to(fa, (len(self.nodes), len(lam_a)))
        fb = np.broadcast_to(fb, (len(self.nodes), len(lam_b)))
        if not (np.all(np.isfinite(fa)) and np.all(np.isfinite(fb))):
            raise EvaluationError(f"{self.name}: factor values are not finite on the spectrum")
        return fa, fb

    def symbol(self) -> BivariateSymbol:
        def func(a, b):
            a, b = np.broadcast_arrays(np.asarray(a, dtype=float), np.asarray(b, dtype=float))
            fa, fb = self.factor_values(a.ravel(), b.ravel())
            return np.einsum("k,ki,ki->i", self.weights, fa, fb).reshape(a.shape)

        return BivariateSymbol(func, name=f"sym[{self.name}]")


def fourier_representation(
    g: GFunction,
    t_max: float,
    gamma_power: float = 1.0,
    kappa_power: float = 1.0,
    tol: float = 1e-8,
) -> FactorizedRepresentation:
    """Trapezoidal discretization of ``psi(a, b) = g(log(a^gp / b^kp))``.

    With ``g(t) = int gt(s) e^{i s t} ds`` the representation is
    ``w_k = ds |gt(s_k)|``, ``fA(s, a) = phase_k a^{i gp s}``,
    ``fB(s, b) = b^{-i kp s}``. The node spacing is set by aliasing: the
    discrete sum reproduces ``sum_n g(t + 2 pi n / ds)``, so ``ds`` is small
    enough that ``g`` has decayed below ``tol`` at distance ``2 pi / ds - t_max``.
    The transform ``gt`` itself comes from a trapezoidal sum in ``t``, which is
    spectrally accurate because ``g`` is analytic in a strip and decays
    exponentially. ``t_max`` bounds ``|log(a^gp / b^kp)|`` over the spectra the
    representation will meet.
    """
    if not g.decay_rate or g.decay_rate <= 0:
        raise ParameterError(f"{g.label}: need a positive exponential decay rate")
    rate = min(g.decay_rate, 10.0)
    strip = g.strip if g.strip and math.isfinite(g.strip) else 2 * math.pi
    c0 = max(1.0, float(np.max(np.abs(g.eval(np.linspace(-5, 5, 101))))))

    # transform on a t-grid out to where |g| < 1e-15
    T = (math.log(c0) + 36.0) / rate
    dt = min(0.25, strip / 8)
    nt = int(math.ceil(T / dt))
    t = dt * np.arange(-nt, nt + 1)
    gt_vals = g.eval(t)

    # s-spacing from aliasing, s-range from decay of the transform (~ e^{-strip |s|})
    reach = math.log(4 * c0 / tol) / rate
    ds = 2 * math.pi / (t_max + reach)
    S = (math.log(1.0 / tol) + 12.0) / strip
    while True:
        ns = int(math.ceil(S / ds))
        s = ds * np.arange(-ns, ns + 1)
        transform = (dt / (2 * math.pi)) * (np.exp(-1j * np.outer(s, t)) @ gt_vals)
        edge = ds * np.sum(np.abs(transform[np.abs(s) > S - 1.0]))
        if edge < tol / 10 or S > 400:
            break
        S *= 1.5
    mag = np.abs(transform)
    # drop the smallest nodes as long as their total mass stays below tol / 4
    order = np.argsort(mag)
    dropped = np.cumsum(mag[order]) * ds
    keep = np.ones(len(s), dtype=bool)
    keep[order[dropped < tol / 4]] = False
    alias = 2 * c0 * math.exp(-rate * (2 * math.pi / ds - t_max))
    err = alias + ds * float(np.sum(mag[~keep])) + edge

    s_k = s[keep]
    phase = transform[keep] / mag[keep]
    weights = ds * mag[keep]

    def fA(sig, lam, _s=s_k, _ph=phase):
        idx = _node_index(_s, sig)
        return _ph[idx] * np.exp(1j * gamma_power * sig * np.log(_pos_power(lam, 1.0)))

    def fB(sig, lam):
        return np.exp(-1j * kappa_power * sig * np.log(_pos_power(lam, 1.0)))

    return FactorizedRepresentation(s_k, weights, fA, fB, error_estimate=err, name=f"fourier[{g.label}]")


def _node_index(nodes: np.ndarray, sig) -> np.ndarray:
    sig = np.asarray(sig, dtype=float)
    idx = np.searchsorted(nodes, sig)
    idx = np.clip(idx, 0, len(nodes) - 1)
    left = np.clip(idx - 1, 0, len(nodes) - 1)
    pick_left = np.abs(nodes[left] - sig) < np.abs(nodes[idx] - sig)
    return np.where(pick_left, left, idx)


# application


def _check_shapes(decomp_a: EigenDecomposition, decomp_b: EigenDecomposition, X: DenseTensor):
    if not (decomp_a.shape == decomp_b.shape == X.shape):
        raise DimensionError(f"shapes differ: A {decomp_a.shape}, B {decomp_b.shape}, X {X.shape}")


def pdti_apply_spectral(
    symbol: BivariateSymbol, decomp_a: EigenDecomposition, decomp_b: EigenDecomposition, X: DenseTensor
) -> DenseTensor:
    _check_shapes(decomp_a, decomp_b, X)
    Psi = symbol.matrix(decomp_a.eigenvalues, decomp_b.eigenvalues)
    Va, Vb = decomp_a.vectors, decomp_b.vectors
    core = Va.conj().T @ X.unfold() @ Vb
    return fold(Va @ (Psi * core) @ Vb.conj().T, X.shape)


def pdti_apply_quadrature(
    rep: FactorizedRepresentation, decomp_a: EigenDecomposition, decomp_b: EigenDecomposition, X: DenseTensor
) -> DenseTensor:
    _check_shapes(decomp_a, decomp_b, X)
    fa, fb = rep.factor_values(decomp_a.eigenvalues, decomp_b.eigenvalues)
    Va, Vb = decomp_a.vectors, decomp_b.vectors
    # F_{A,k} = Va diag(fa[k]) Va^H for every node at once
    FA = np.einsum("ij,kj,lj->kil", Va, fa, Va.conj())
    FB = np.einsum("ij,kj,lj->kil", Vb, fb, Vb.conj())
    terms = FA @ X.unfold() @ FB
    return fold(np.tensordot(rep.weights, terms, axes=1), X.shape)


class PdtiOperator:
    """``T_psi`` for fixed decompositions, with an optional materialized
    ``total^2 x total^2`` matrix acting on row-major ``vec(X)``."""

    def __init__(self, symbol: BivariateSymbol, decomp_a: EigenDecomposition, decomp_b: EigenDecomposition, cache: bool = False):
        if decomp_a.shape != decomp_b.shape:
            raise DimensionError(f"decompositions have shapes {decomp_a.shape} and {decomp_b.shape}")
        self.symbol = symbol
        self.decomp_a = decomp_a
        self.decomp_b = decomp_b
        self.shape = decomp_a.shape
        self._Psi = symbol.matrix(decomp_a.eigenvalues, decomp_b.eigenvalues)
        self._matrix = self._materialize() if cache else None

    def _materialize(self) -> np.ndarray:
        # vec(Va (Psi o (Va^H X Vb)) Vb^H) = (Va kron conj(Vb)) diag(vec Psi) (Va^H kron Vb^T) vec X
        Va, Vb = self.decomp_a.vectors, self.decomp_b.vectors
        left = np.kron(Va, Vb.conj())
        right = np.kron(Va.conj().T, Vb.T)
        M = (left * self._Psi.reshape(-1)) @ right
        M.setflags(write=False)
        return M

    @property
    def matrix(self) -> np.ndarray:
        if self._matrix is None:
            self._matrix = self._materialize()
        return self._matrix

    def __call__(self, X: DenseTensor) -> DenseTensor:
        if X.shape != self.shape:
            raise DimensionError(f"operator acts on {self.shape}, got {X.shape}")
        Va, Vb = self.decomp_a.vectors, self.decomp_b.vectors
        core = Va.conj().T @ X.unfold() @ Vb
        return fold(Va @ (self._Psi * core) @ Vb.conj().T, self.shape)

    def apply_cached(self, X: DenseTensor) -> DenseTensor:
        n = self.shape.total
        return fold((self.matrix @ X.unfold().reshape(-1)).reshape(n, n), self.shape)


# structural identities


def homomorphism_residual(
    psi1: BivariateSymbol, psi2: BivariateSymbol, decomp_a: EigenDecomposition, decomp_b: EigenDecomposition, X: DenseTensor
) -> float:
    """``||T_{psi1 psi2}(X) - T_{psi1}(T_{psi2}(X))||``."""
    joint = pdti_apply_spectral(symbol_product(psi1, psi2), decomp_a, decomp_b, X)
    nested = pdti_apply_spectral(psi1, decomp_a, decomp_b, pdti_apply_spectral(psi2, decomp_a, decomp_b, X))
    return spectral_norm(joint - nested)


def kernel_zero_residual(
    psi: BivariateSymbol, decomp_a: EigenDecomposition, decomp_b: EigenDecomposition, X: DenseTensor, Y: DenseTensor
) -> complex:
    """``Tr(T_psi(X) * Y)``; vanishes whenever ``psi`` vanishes on ``Sp(A) x Sp(B)``."""
    return complex(np.trace((pdti_apply_spectral(psi, decomp_a, decomp_b, X) @ Y).unfold()))


def norm_estimate_ratio(rep: FactorizedRepresentation, decomp_a: EigenDecomposition, decomp_b: EigenDecomposition, X: DenseTensor) -> float:
    """``||T(X)|| / (total^2 * norm_estimate * ||X||)``; at most 1."""
    out = pdti_apply_quadrature(rep, decomp_a, decomp_b, X)
    denom = X.shape.total**2 * rep.norm_estimate * spectral_norm(X)
    if denom == 0:
        return 0.0
    return spectral_norm(out) / denom


@dataclass(frozen=True)
class Perturbation:
    """Inputs of the generalized divided-difference perturbation identity

        H_A (F_A X -+ X F_B) H_B = T_psi(G_A (E_A^kA X -+ X E_B^kB) G_B)

    with ``F = f(E^k)``, ``G = g(E^m)``, ``H = h(E^n)`` on each side.
    """

    f: Callable
    g_a: Callable
    g_b: Callable
    h_a: Callable
    h_b: Callable
    m_a: int = 1
    n_a: int = 1
    k_a: int = 1
    m_b: int = 1
    n_b: int = 1
    k_b: int = 1
    sign: str = "minus"
    fprime: Optional[Callable] = None
    tol: float = DD_TOL

    def __post_init__(self):
        if self.sign not in ("minus", "plus"):
            raise ParameterError(f"sign must be 'minus' or 'plus', got {self.sign!r}")
        for name in ("m_a", "n_a", "k_a", "m_b", "n_b", "k_b"):
            v = getattr(self, name)
            if int(v) != v or v < 1:
                raise ParameterError(f"{name} must be a positive integer, got {v!r}")

    def symbol(self, sp_a, sp_b) -> BivariateSymbol:
        return make_perturbation_symbol(
            self.f, self.g_a, self.g_b, self.h_a, self.h_b,
            self.m_a, self.n_a, self.k_a, self.m_b, self.n_b, self.k_b,
            sp_a, sp_b, self.sign, fprime=self.fprime, tol=self.tol,
        )


def make_perturbation_symbol(
    f, g_a, g_b, h_a, h_b,
    m_a, n_a, k_a, m_b, n_b, k_b,
    sp_a, sp_b, sign="minus", fprime=None, tol=DD_TOL,
) -> BivariateSymbol:
    """``h_A(a^nA)/g_A(a^mA) * [f(a^kA) -+ f(b^kB)] / [a^kA -+ b^kB] * h_B(b^nB)/g_B(b^mB)``
    on ``sp_a x sp_b`` and zero elsewhere.

    Raises :class:`SingularSymbolError` when ``g_A`` or ``g_B`` vanishes on its
    power spectrum, or (plus sign only) when ``a^kA + b^kB = 0``.
    """
    if sign not in ("minus", "plus"):
        raise ParameterError(f"sign must be 'minus' or 'plus', got {sign!r}")
    sp_a = np.asarray(sp_a, dtype=float)
    sp_b = np.asarray(sp_b, dtype=float)
    for g, sp, m, side in ((g_a, sp_a, m_a, "A"), (g_b, sp_b, m_b, "B")):
        vals = evaluate_on_spectrum(g, sp**m)
        if np.any(vals == 0):
            raise SingularSymbolError(f"g_{side} vanishes on the spectrum of E_{side}^{m}")
    if sign == "plus":
        den = sp_a[:, None] ** k_a + sp_b[None, :] ** k_b
        scale = np.maximum.outer(np.abs(sp_a) ** k_a, np.abs(sp_b) ** k_b)
        if np.any(np.abs(den) <= tol * np.maximum(scale, 1e-300)):
            raise SingularSymbolError("a^kA + b^kB vanishes on the spectra (plus variant has no limit)")

    def func(a, b):
        ua, ub = a**k_a, b**k_b
        if sign == "minus":
            core = divided_difference_array(f, fprime, ua, ub, tol)
        else:
            core = (np.asarray(f(ua), dtype=complex) + np.asarray(f(ub), dtype=complex)) / (ua + ub)
        left = np.asarray(h_a(a**n_a), dtype=complex) / np.asarray(g_a(a**m_a), dtype=complex)
        right = np.asarray(h_b(b**n_b), dtype=complex) / np.asarray(g_b(b**m_b), dtype=complex)
        return left * core * right

    return BivariateSymbol(func, support=(sp_a, sp_b), name=f"perturbation[{sign}]", dd_tol=tol)


def _matrix_power(E: DenseTensor, k: int) -> DenseTensor:
    out = E
    for _ in range(k - 1):
        out = out @ E
    return out


def perturbation_sides(p: Perturbation, E_a: DenseTensor, E_b: DenseTensor, X: DenseTensor):
    """Left side via functional calculus and right side via ``T_psi``."""
    da, db = eigendecompose(E_a), eigendecompose(E_b)
    sym = p.symbol(da.eigenvalues, db.eigenvalues)
    s = -1.0 if p.sign == "minus" else 1.0
    F_a = apply_scalar_function(p.f, da, p.k_a)
    F_b = apply_scalar_function(p.f, db, p.k_b)
    H_a = apply_scalar_function(p.h_a, da, p.n_a)
    H_b = apply_scalar_function(p.h_b, db, p.n_b)
    G_a = apply_scalar_function(p.g_a, da, p.m_a)
    G_b = apply_scalar_function(p.g_b, db, p.m_b)
    left = H_a @ (F_a @ X + s * (X @ F_b)) @ H_b
    inner = G_a @ (_matrix_power(E_a, p.k_a) @ X + s * (X @ _matrix_power(E_b, p.k_b))) @ G_b
    right = pdti_apply_spectral(sym, da, db, inner)
    scale = spectral_norm(H_a) * (spectral_norm(F_a @ X) + spectral_norm(X @ F_b)) * spectral_norm(H_b)
    return left, right, scale


def perturbation_residual(p: Perturbation, E_a: DenseTensor, E_b: DenseTensor, X: DenseTensor) -> float:
    """Relative two-path residual of the perturbation identity.

    The difference of the two sides is measured against
    ``||H_A|| (||F_A X|| + ||X F_B||) ||H_B||``, the size of the terms before
    any cancellation, which is the natural scale of rounding error.
    """
    left, right, scale = perturbation_sides(p, E_a, E_b, X)
    gap = spectral_norm(left - right)
    return gap / scale if scale > 0 else gap
