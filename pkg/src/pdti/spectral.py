"""Hermitian eigendecomposition and scalar functional calculus.

Eigenvalues are returned in descending order. Eigenvector phases are left
as LAPACK returns them, so only projections (never the vectors themselves)
are meaningful for comparison.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Callable, Union

import numpy as np

from .errors import EvaluationError, ParameterError, SymmetryError
from .tensor import DenseTensor, Shape, fold, spectral_norm

__all__ = [
    "EigenDecomposition",
    "eigendecompose",
    "apply_scalar_function",
    "is_positive_definite",
    "tensor_power",
    "evaluate_on_spectrum",
]

DEFAULT_SYMMETRY_TOL = 1e-10


@dataclass(frozen=True)
class EigenDecomposition:
    """Eigenvalues and unit eigenvectors of a Hermitian tensor's unfolding.

    ``vectors[:, i]`` spans the rank-one projection ``projections[i]``.
    """

    shape: Shape
    eigenvalues: np.ndarray
    vectors: np.ndarray

    @cached_property
    def projections(self) -> list[DenseTensor]:
        V = self.vectors
        return [fold(np.outer(V[:, i], V[:, i].conj()), self.shape) for i in range(V.shape[1])]

    def reconstruct(self) -> DenseTensor:
        V = self.vectors
        return fold((V * self.eigenvalues) @ V.conj().T, self.shape)

    def function(self, values) -> DenseTensor:
        """``sum_i values[i] P_i`` for per-eigenvalue scalars ``values``."""
        V = self.vectors
        return fold((V * np.asarray(values)) @ V.conj().T, self.shape)

    def __len__(self):
        return len(self.eigenvalues)


def eigendecompose(H: DenseTensor, tol: float = DEFAULT_SYMMETRY_TOL) -> EigenDecomposition:
    """Eigendecomposition of a Hermitian tensor.

    Raises :class:`SymmetryError` when ``||H - H^H|| > tol * ||H||``. Inputs
    within tolerance are Hermitized before the solve.
    """
    M = H.unfold()
    skew = np.linalg.norm(M - M.conj().T, 2)
    scale = spectral_norm(H)
    if skew > tol * scale:
        raise SymmetryError(f"||H - H^H|| = {skew:.3e} exceeds {tol:g} * ||H|| = {tol * scale:.3e}")
    w, V = np.linalg.eigh((M + M.conj().T) / 2)
    order = np.argsort(w)[::-1]
    w = w[order]
    V = V[:, order]
    w.setflags(write=False)
    V.setflags(write=False)
    return EigenDecomposition(H.shape, w, V)


def evaluate_on_spectrum(f: Callable, points: np.ndarray) -> np.ndarray:
    """Apply a scalar function pointwise and insist on finite output."""
    with np.errstate(all="ignore"):
        try:
            out = np.asarray(f(points), dtype=np.complex128)
            if out.shape != points.shape:
                raise ValueError
        except (TypeError, ValueError):
            out = np.array([complex(f(float(x))) for x in points], dtype=np.complex128)
    if not np.all(np.isfinite(out)):
        bad = points[~np.isfinite(out)]
        raise EvaluationError(f"function is not finite at spectral points {bad.tolist()}")
    return out


def apply_scalar_function(
    f: Callable, H: Union[DenseTensor, EigenDecomposition], m: int = 1
) -> DenseTensor:
    """``sum_i f(lambda_i ** m) P_i`` over the eigendecomposition of ``H``."""
    decomp = H if isinstance(H, EigenDecomposition) else eigendecompose(H)
    if m < 1 or int(m) != m:
        raise ParameterError(f"power m must be a positive integer, got {m!r}")
    values = evaluate_on_spectrum(f, decomp.eigenvalues ** int(m))
    return decomp.function(values)


def tensor_power(H: Union[DenseTensor, EigenDecomposition], p: float) -> DenseTensor:
    """Real power of a Hermitian tensor; non-integer ``p`` needs a positive spectrum.

    Positive integer powers of a plain tensor are formed by repeated Einstein
    products, which avoids eigenvector round-off.
    """
    if isinstance(H, DenseTensor) and float(p).is_integer() and p >= 1:
        out = H
        for _ in range(int(p) - 1):
            out = out @ H
        return out
    decomp = H if isinstance(H, EigenDecomposition) else eigendecompose(H)
    lam = decomp.eigenvalues
    if float(p).is_integer():
        return decomp.function(lam ** int(p))
    if np.any(lam <= 0):
        raise EvaluationError(f"non-integer power {p} of a tensor with min eigenvalue {lam.min():.3e}")
    return decomp.function(lam**p)


def is_positive_definite(H: DenseTensor, tol: float = DEFAULT_SYMMETRY_TOL) -> bool:
    return bool(eigendecompose(H, tol=max(tol, DEFAULT_SYMMETRY_TOL)).eigenvalues[-1] > tol)
