import json

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from pdti.errors import DimensionError
from pdti.tensor import (
    DenseTensor,
    Shape,
    abs_tensor,
    commutator,
    conjugate_transpose,
    einstein_product,
    fold,
    from_json,
    inner_product,
    is_hermitian,
    random_tensor,
    spectral_norm,
    to_json,
    trace,
)
from strategies import tensor_pairs, tensors


def einsum_product(X, Y):
    n = X.shape.order
    i, k, j = "abc"[:n], "def"[:n], "ghi"[:n]
    return np.einsum(f"{i}{k},{k}{j}->{i}{j}", X.data, Y.data)


class TestShape:
    def test_properties(self):
        s = Shape((2, 3))
        assert s.order == 2
        assert s.total == 6
        assert s.full == (2, 3, 2, 3)
        assert str(s) == "(2,3;2,3)"

    @pytest.mark.parametrize("modes", [(), (0,), (2, -1)])
    def test_rejects_bad_modes(self, modes):
        with pytest.raises(DimensionError):
            Shape(modes)


class TestDenseTensor:
    def test_infers_shape(self):
        X = DenseTensor(np.zeros((2, 3, 2, 3)))
        assert X.shape == Shape((2, 3))

    def test_rejects_non_square(self):
        with pytest.raises(DimensionError):
            DenseTensor(np.zeros((2, 3, 3, 2)))

    def test_rejects_odd_order(self):
        with pytest.raises(DimensionError):
            DenseTensor(np.zeros((2, 2, 2)))

    def test_immutable(self, rng, shape):
        X = random_tensor(shape, rng)
        with pytest.raises(AttributeError):
            X.shape = Shape((4,))
        with pytest.raises(ValueError):
            X.data[0, 0, 0, 0] = 1.0

    def test_unfold_is_row_major(self):
        data = np.arange(16).reshape(2, 2, 2, 2)
        X = DenseTensor(data)
        M = X.unfold()
        # entry (i1, i2, j1, j2) sits at row 2*i1 + i2, column 2*j1 + j2
        assert M[2 * 1 + 0, 2 * 0 + 1] == data[1, 0, 0, 1]

    def test_identity_is_unit(self, rng, shape):
        X = random_tensor(shape, rng)
        I = DenseTensor.identity(shape)
        assert (I @ X).allclose(X, atol=0)
        assert (X @ I).allclose(X, atol=0)

    def test_dimension_mismatch(self, rng):
        X = random_tensor(Shape((2, 2)), rng)
        Y = random_tensor(Shape((4,)), rng)
        with pytest.raises(DimensionError):
            X @ Y
        with pytest.raises(DimensionError):
            X + Y

    def test_scalar_arithmetic(self, rng, shape):
        X = random_tensor(shape, rng)
        assert (2 * X - X).allclose(X)
        assert (X / 2 + X / 2).allclose(X)
        assert (-X + X).allclose(DenseTensor.zeros(shape))


class TestProducts:
    def test_diagonal_product(self):
        A = DenseTensor.diag([1, 2])
        B = DenseTensor.diag([3, 4])
        assert np.allclose((A @ B).unfold(), np.diag([3, 8]))

    @given(tensor_pairs(2))
    def test_matches_index_notation(self, pair):
        X, Y = pair
        assert np.allclose(einstein_product(X, Y).data, einsum_product(X, Y), atol=1e-12)

    @given(tensor_pairs(3))
    def test_associative(self, triple):
        X, Y, Z = triple
        lhs = (X @ Y) @ Z
        rhs = X @ (Y @ Z)
        scale = spectral_norm(X) * spectral_norm(Y) * spectral_norm(Z)
        assert spectral_norm(lhs - rhs) <= 1e-12 * scale

    @given(tensor_pairs(2))
    def test_trace_cyclic(self, pair):
        X, Y = pair
        assert abs(trace(X @ Y) - trace(Y @ X)) <= 1e-12 * (1 + spectral_norm(X) * spectral_norm(Y) * X.shape.total)

    @given(tensor_pairs(2))
    def test_submultiplicative(self, pair):
        X, Y = pair
        assert spectral_norm(X @ Y) <= spectral_norm(X) * spectral_norm(Y) * (1 + 1e-12)

    @given(tensor_pairs(2))
    def test_adjoint_reverses_products(self, pair):
        X, Y = pair
        assert (X @ Y).H.allclose(Y.H @ X.H, atol=1e-12)

    @given(tensor_pairs(2))
    def test_inner_product_is_trace_form(self, pair):
        X, Y = pair
        assert np.isclose(inner_product(X, Y), trace(X.H @ Y), atol=1e-10)


class TestDerived:
    def test_conjugate_transpose_swaps_mode_groups(self):
        data = np.arange(16, dtype=complex).reshape(2, 2, 2, 2) * (1 + 1j)
        X = DenseTensor(data)
        Xh = conjugate_transpose(X)
        assert Xh.data[1, 0, 0, 1] == np.conj(data[0, 1, 1, 0])

    def test_commutator_of_diagonals_vanishes(self):
        A = DenseTensor.diag([1, 2, 3, 4], Shape((2, 2)))
        B = DenseTensor.diag([5, 6, 7, 8], Shape((2, 2)))
        assert commutator(A, B).allclose(DenseTensor.zeros(Shape((2, 2))), atol=0)

    @given(tensors())
    def test_abs_squares_to_gram(self, X):
        R = abs_tensor(X)
        assert is_hermitian(R)
        assert (R @ R).allclose(X.H @ X, atol=1e-10 * (1 + spectral_norm(X) ** 2))

    def test_abs_of_negative_diagonal(self):
        A = DenseTensor.diag([-2.0, 3.0])
        assert np.allclose(abs_tensor(A).unfold(), np.diag([2.0, 3.0]))

    def test_spectral_norm_of_diagonal(self):
        assert spectral_norm(DenseTensor.diag([1, -5, 2])) == pytest.approx(5.0)

    @given(tensors(hermitian=True))
    def test_random_hermitian_is_exact(self, H):
        assert np.array_equal(H.data, H.H.data)


class TestSerialization:
    @given(tensors())
    def test_round_trip(self, X):
        assert from_json(to_json(X)) == X

    def test_document_layout(self):
        doc = json.loads(to_json(DenseTensor.diag([1 + 2j, 3])))
        assert doc["modes"] == [2]
        assert doc["re"] == [1.0, 0.0, 0.0, 3.0]
        assert doc["im"] == [2.0, 0.0, 0.0, 0.0]

    @pytest.mark.parametrize("text", ['{"re": [1]}', '{"modes": [2], "re": [1, 2, 3, 4], "im": [0]}', '{"modes": [2], "re": [1]}'])
    def test_malformed(self, text):
        with pytest.raises(DimensionError):
            from_json(text)

    def test_fold_checks_size(self):
        with pytest.raises(DimensionError):
            fold(np.eye(3), Shape((2,)))
