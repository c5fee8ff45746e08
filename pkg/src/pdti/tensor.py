"""Dense complex tensors under the Einstein product.

A square tensor of order 2N lives on ``I_1 x ... x I_N x I_1 x ... x I_N``.
Entries are stored as a numpy array of that shape, so the linearization of
each N-tuple is row-major over ``(i_1, ..., i_N)``. Unfolding is therefore a
plain reshape to ``(total, total)``, and every spectral routine downstream
relies on that order.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import DimensionError

__all__ = [
    "Shape",
    "DenseTensor",
    "add",
    "einstein_product",
    "conjugate_transpose",
    "trace",
    "inner_product",
    "spectral_norm",
    "abs_tensor",
    "commutator",
    "unfold",
    "fold",
    "is_hermitian",
    "to_json",
    "from_json",
]


@dataclass(frozen=True)
class Shape:
    """Mode sizes ``(I_1, ..., I_N)`` of a square order-2N tensor."""

    modes: tuple[int, ...]

    def __post_init__(self):
        modes = tuple(int(m) for m in self.modes)
        if not modes or any(m < 1 for m in modes):
            raise DimensionError(f"modes must be positive integers, got {self.modes!r}")
        object.__setattr__(self, "modes", modes)

    @property
    def order(self) -> int:
        return len(self.modes)

    @property
    def total(self) -> int:
        """Product of the modes; side length of the square unfolding."""
        return math.prod(self.modes)

    @property
    def full(self) -> tuple[int, ...]:
        return self.modes + self.modes

    def __str__(self):
        m = ",".join(map(str, self.modes))
        return f"({m};{m})"


def _as_shape(shape) -> Shape:
    if isinstance(shape, Shape):
        return shape
    if isinstance(shape, int):
        return Shape((shape,))
    return Shape(tuple(shape))


class DenseTensor:
    """Immutable complex tensor on ``shape.modes + shape.modes``.

    ``X @ Y`` is the Einstein product (contraction of the trailing N modes of
    ``X`` with the leading N modes of ``Y``), ``X.H`` the conjugate transpose.
    """

    __slots__ = ("shape", "data")

    def __init__(self, data, shape=None):
        arr = np.array(data, dtype=np.complex128)
        if shape is None:
            if arr.ndim % 2 or arr.ndim == 0:
                raise DimensionError(f"need an even-order array, got ndim={arr.ndim}")
            n = arr.ndim // 2
            if arr.shape[:n] != arr.shape[n:]:
                raise DimensionError(f"array shape {arr.shape} is not square")
            shape = Shape(arr.shape[:n])
        else:
            shape = _as_shape(shape)
            if arr.shape != shape.full:
                if arr.size != shape.total**2:
                    raise DimensionError(
                        f"{arr.size} entries cannot fill shape {shape} ({shape.total ** 2} needed)"
                    )
                arr = arr.reshape(shape.full)
        arr.setflags(write=False)
        object.__setattr__(self, "shape", shape)
        object.__setattr__(self, "data", arr)

    def __setattr__(self, name, value):
        raise AttributeError("DenseTensor is immutable")

    # constructors

    @classmethod
    def zeros(cls, shape) -> "DenseTensor":
        shape = _as_shape(shape)
        return cls(np.zeros(shape.full, dtype=np.complex128), shape)

    @classmethod
    def identity(cls, shape) -> "DenseTensor":
        shape = _as_shape(shape)
        return fold(np.eye(shape.total, dtype=np.complex128), shape)

    @classmethod
    def from_matrix(cls, matrix, shape=None) -> "DenseTensor":
        matrix = np.asarray(matrix)
        if shape is None:
            shape = Shape((matrix.shape[0],))
        return fold(matrix, shape)

    @classmethod
    def diag(cls, values, shape=None) -> "DenseTensor":
        values = np.asarray(values)
        return cls.from_matrix(np.diag(values), shape)

    # views

    def unfold(self) -> np.ndarray:
        return self.data.reshape(self.shape.total, self.shape.total)

    @property
    def H(self) -> "DenseTensor":
        return conjugate_transpose(self)

    # arithmetic

    def _check(self, other):
        if not isinstance(other, DenseTensor):
            raise TypeError(f"expected DenseTensor, got {type(other).__name__}")
        if other.shape != self.shape:
            raise DimensionError(f"shape mismatch: {self.shape} vs {other.shape}")

    def __add__(self, other):
        return add(self, other)

    def __sub__(self, other):
        self._check(other)
        return DenseTensor(self.data - other.data, self.shape)

    def __neg__(self):
        return DenseTensor(-self.data, self.shape)

    def __mul__(self, scalar):
        if isinstance(scalar, DenseTensor):
            return NotImplemented
        return DenseTensor(complex(scalar) * self.data, self.shape)

    __rmul__ = __mul__

    def __truediv__(self, scalar):
        return DenseTensor(self.data / complex(scalar), self.shape)

    def __matmul__(self, other):
        return einstein_product(self, other)

    def __eq__(self, other):
        if not isinstance(other, DenseTensor):
            return NotImplemented
        return self.shape == other.shape and np.array_equal(self.data, other.data)

    __hash__ = None

    def __repr__(self):
        return f"DenseTensor(shape={self.shape}, norm={spectral_norm(self):.6g})"

    def allclose(self, other, atol=1e-12, rtol=0.0) -> bool:
        self._check(other)
        return bool(np.allclose(self.data, other.data, atol=atol, rtol=rtol))


def add(X: DenseTensor, Y: DenseTensor) -> DenseTensor:
    X._check(Y)
    return DenseTensor(X.data + Y.data, X.shape)


def einstein_product(X: DenseTensor, Y: DenseTensor) -> DenseTensor:
    """Contract the trailing N modes of ``X`` with the leading N modes of ``Y``."""
    if not isinstance(Y, DenseTensor):
        raise TypeError(f"expected DenseTensor, got {type(Y).__name__}")
    if X.shape.modes != Y.shape.modes:
        raise DimensionError(
            f"trailing modes {X.shape.modes} do not match leading modes {Y.shape.modes}"
        )
    return fold(X.unfold() @ Y.unfold(), X.shape)


def conjugate_transpose(X: DenseTensor) -> DenseTensor:
    n = X.shape.order
    axes = tuple(range(n, 2 * n)) + tuple(range(n))
    return DenseTensor(np.conj(np.transpose(X.data, axes)), X.shape)


def trace(X: DenseTensor) -> complex:
    return complex(np.trace(X.unfold()))


def inner_product(X: DenseTensor, Y: DenseTensor) -> complex:
    """``Tr(X^H * Y)``; conjugate-linear in ``X``, linear in ``Y``."""
    X._check(Y)
    return complex(np.vdot(X.data, Y.data))


def spectral_norm(X: DenseTensor) -> float:
    """Largest singular value of the unfolding (full SVD)."""
    return float(np.linalg.svd(X.unfold(), compute_uv=False)[0])


def abs_tensor(A: DenseTensor) -> DenseTensor:
    """Positive semidefinite square root of ``A^H * A``.

    Uses the conjugate transpose; for real or Hermitian inputs this agrees
    with the plain-transpose form.
    """
    M = A.unfold()
    gram = M.conj().T @ M
    w, V = np.linalg.eigh((gram + gram.conj().T) / 2)
    root = (V * np.sqrt(np.clip(w, 0.0, None))) @ V.conj().T
    return fold(root, A.shape)


def commutator(A: DenseTensor, B: DenseTensor) -> DenseTensor:
    A._check(B)
    return A @ B - B @ A


def unfold(X: DenseTensor) -> np.ndarray:
    return X.unfold()


def fold(M, shape) -> DenseTensor:
    shape = _as_shape(shape)
    M = np.asarray(M)
    if M.shape != (shape.total, shape.total):
        raise DimensionError(f"array shape {M.shape} does not fold into {shape}")
    return DenseTensor(M.reshape(shape.full), shape)


def is_hermitian(X: DenseTensor, tol: float = 1e-10) -> bool:
    scale = max(spectral_norm(X), 1.0)
    return spectral_norm(X - X.H) <= tol * scale


# serialization


def to_dict(X: DenseTensor) -> dict:
    flat = X.data.reshape(-1)
    return {
        "modes": list(X.shape.modes),
        "re": [float(v) for v in flat.real],
        "im": [float(v) for v in flat.imag],
    }


def from_dict(doc: dict) -> DenseTensor:
    try:
        modes = doc["modes"]
        re = np.asarray(doc["re"], dtype=float)
        im = np.asarray(doc.get("im", np.zeros_like(re)), dtype=float)
    except (KeyError, TypeError) as exc:
        raise DimensionError(f"malformed tensor document: {exc}") from exc
    if re.shape != im.shape:
        raise DimensionError("'re' and 'im' have different lengths")
    return DenseTensor(re + 1j * im, Shape(tuple(modes)))


def to_json(X: DenseTensor, **kwargs) -> str:
    return json.dumps(to_dict(X), **kwargs)


def from_json(text: str) -> DenseTensor:
    return from_dict(json.loads(text))


def random_tensor(shape, rng: np.random.Generator, hermitian: bool = False) -> DenseTensor:
    """Standard complex Gaussian tensor; symmetrized when ``hermitian``."""
    shape = _as_shape(shape)
    n = shape.total
    G = (rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))) / math.sqrt(2)
    if hermitian:
        G = (G + G.conj().T) / 2
    return fold(G, shape)


def shape_from_modes(modes: Sequence[int]) -> Shape:
    return Shape(tuple(modes))
