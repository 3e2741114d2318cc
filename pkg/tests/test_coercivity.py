import numpy as np
import pytest

from kolmolab.coercivity import (
    check_sequence_bounds,
    coercive_matrix_check,
    delta_s,
    sequence_abc,
    sequences,
    sweep_rows,
)


class TestDelta:
    @pytest.mark.parametrize("s, expected", [(0.0, 4.0), (0.2, 3.08), (0.4, 0.52)])
    def test_values(self, s, expected):
        assert delta_s(s) == pytest.approx(expected)

    def test_positive_on_domain(self):
        assert min(delta_s(s) for s in np.linspace(0, 0.4, 41)) > 0

    @pytest.mark.parametrize("s", [-0.01, 0.41])
    def test_domain_enforced(self, s):
        with pytest.raises(ValueError):
            delta_s(s)


class TestSequences:
    @pytest.mark.parametrize("n, k", [(0, 2.0), (5, 3.0), (-7, 10.0)])
    def test_b_at_s_zero(self, n, k):
        assert sequence_abc(n, k, 0.0).b == pytest.approx(k * k + 1.25)

    def test_c0_value(self):
        t = sequence_abc(0, 2.0, 0.0)
        assert t.a == 4.0
        assert t.c == pytest.approx(4.6)

    def test_symmetric_in_n(self):
        n = np.arange(-30, 31)
        a, b, c = sequences(n, 3.0, 0.3)
        np.testing.assert_allclose(b, b[::-1], rtol=1e-13)
        np.testing.assert_allclose(c, c[::-1], rtol=1e-13)

    def test_extended_precision_agrees(self):
        n = np.arange(-50, 51)
        lo = sequences(n, 4.0, 0.2)[2]
        hi = sequences(n, 4.0, 0.2, dtype=np.longdouble)[2]
        np.testing.assert_allclose(lo, hi.astype(float), rtol=1e-12)

    def test_k_too_small(self):
        with pytest.raises(ValueError):
            sequence_abc(0, 1.0, 0.0)


class TestSequenceSweep:
    def test_small_sweep_nonnegative(self):
        rep = check_sequence_bounds([2.0, 4.0, 10.0], 100, [0.0, 0.2, 0.4])
        assert rep.ok
        assert rep.min_slack_b >= 0
        assert rep.points == 3 * 3 * 201

    def test_rows_shape(self):
        rows = list(sweep_rows([2.0], 3, [0.0]))
        assert len(rows) == 7
        assert len(rows[0]) == 8


class TestCoerciveMatrix:
    @pytest.mark.parametrize("k, s", [(2.0, 0.0), (4.0, 0.4)])
    def test_decomposition_and_positivity(self, k, s):
        chk = coercive_matrix_check(k, s, N=64)
        assert chk.decomposition_residual <= 1e-10
        assert chk.min_eig >= -1e-10
        assert not chk.flagged

    def test_double_precision_mode_runs(self):
        chk = coercive_matrix_check(2.0, 0.2, N=64, precision="double")
        assert chk.relative_residual < 1e-12

    def test_small_truncation_rejected(self):
        with pytest.raises(ValueError, match="at least 64"):
            coercive_matrix_check(2.0, 0.0, N=32)
