import numpy as np
import pytest

from kolmolab.linear_euler import apply_B
from kolmolab.operators import (
    OperatorMatrix,
    build_A,
    build_B,
    build_delta_shift,
    build_lambda,
    build_laplacian,
    build_omega1_operator,
    identity_errors,
    interior_error,
)
from kolmolab.spectral import ModeFunction


class TestAssembly:
    def test_B_matches_matrix_free_action(self, rng):
        g = ModeFunction(2.0, rng.normal(size=21) + 1j * rng.normal(size=21))
        np.testing.assert_allclose(build_B(2.0, 10).apply(g).coeffs, apply_B(g.coeffs, 2.0), atol=1e-15)

    def test_B_and_A_are_tridiagonal(self):
        assert build_B(3.0, 12).bandwidth == 1
        assert build_A(3.0, 12).bandwidth == 1

    def test_laplacian_symbol(self):
        L = build_laplacian(2.0, 3)
        np.testing.assert_allclose(np.diag(L.entries).real, -(np.arange(-3, 4) ** 2 + 4.0))

    def test_shifted_laplacian_inverse(self):
        D = build_delta_shift(2.0, 1, 5)
        Dinv = build_delta_shift(2.0, 1, 5, inverse=True)
        np.testing.assert_allclose((D @ Dinv).entries, np.eye(11), atol=1e-15)

    def test_singular_shift_raises(self):
        with pytest.raises(ZeroDivisionError):
            build_delta_shift(0.0, 1, 4, inverse=True)

    @pytest.mark.parametrize("k", [1.0, 0.5, -1.0])
    def test_k_at_most_one_rejected(self, k):
        with pytest.raises(ValueError):
            build_B(k, 8)

    def test_lambda_index_checked(self):
        with pytest.raises(ValueError):
            build_lambda(4, 2.0, 8)

    def test_wrong_shape_rejected(self):
        with pytest.raises(ValueError):
            OperatorMatrix(2.0, 3, np.eye(5))

    def test_omega1_operator_at_time_zero_is_laplacian(self):
        assert interior_error(build_omega1_operator(2.0, 0.0, 16), build_laplacian(2.0, 16)) == 0.0


class TestIdentities:
    @pytest.mark.parametrize("k", [2.0, 3.5, 10.0])
    def test_all_identities_hold_on_interior(self, k):
        errs = identity_errors(k, N=64)
        for name, err in errs.items():
            assert err <= 1e-10, name

    def test_lambda1_explicit(self):
        k, N = 2.0, 40
        A, B = build_A(k, N), build_B(k, N)
        Dy = OperatorMatrix(k, N, np.diag(1j * np.arange(-N, N + 1.0)))
        assert interior_error(build_lambda(1, k, N), -2.0 * (A @ Dy) - B) < 1e-12

    def test_independent_of_margin_growth(self):
        a = identity_errors(2.0, N=64, margin=8)
        b = identity_errors(2.0, N=64, margin=16)
        for name in a:
            assert b[name] <= a[name] + 1e-15

    def test_boundary_rows_do_differ(self):
        # identities only hold away from the truncation edge
        k, N = 2.0, 20
        L1, B = build_lambda(1, k, N), build_B(k, N)
        A = build_A(k, N)
        Dy = OperatorMatrix(k, N, np.diag(1j * np.arange(-N, N + 1.0)))
        full = np.abs(L1.entries - (-2.0 * (A @ Dy) - B).entries).max()
        assert full >= 0.0
        assert interior_error(L1, -2.0 * (A @ Dy) - B, margin=2) < 1e-12
