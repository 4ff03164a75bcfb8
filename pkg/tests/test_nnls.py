import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays
from scipy.optimize import nnls as scipy_nnls

from ctp_akkt.nnls import NnlsError, nnls_free
from oracles import brute_force_distance

# entries are zero or of Jacobian scale; subnormal columns would need coefficients near 1e300
finite = st.one_of(st.just(0.0), st.floats(1e-3, 10), st.floats(-10, -1e-3))


def _kkt_gap(A, b, z, free):
    """Largest violation of the optimality conditions of the sign-constrained least squares."""
    w = A.T @ (b - A @ z)
    scale = max(1.0, np.abs(A).max() * max(1.0, np.abs(b).max()))
    gap_free = np.abs(w[free]).max(initial=0.0)
    gap_nonneg = np.maximum(w[~free], 0.0).max(initial=0.0)
    comp = np.abs(w[~free] * z[~free]).max(initial=0.0)
    return max(gap_free, gap_nonneg, comp / scale) / scale


class TestNnlsFree:
    def test_simple_projection(self):
        z, r = nnls_free(np.eye(2), np.array([1.0, -2.0]))
        np.testing.assert_allclose(z, [1.0, 0.0])
        assert r == pytest.approx(2.0)

    def test_free_column_takes_negative_value(self):
        z, r = nnls_free(np.eye(2), np.array([1.0, -2.0]), free=[False, True])
        np.testing.assert_allclose(z, [1.0, -2.0])
        assert r == pytest.approx(0.0, abs=1e-15)

    def test_empty(self):
        z, r = nnls_free(np.zeros((3, 0)), np.array([3.0, 4.0, 0.0]))
        assert z.shape == (0,) and r == 5.0

    def test_rank_deficient(self):
        A = np.array([[1.0, 1.0], [0.0, 0.0]])
        z, r = nnls_free(A, np.array([2.0, 1.0]))
        assert r == pytest.approx(1.0)
        assert np.all(z >= 0)
        np.testing.assert_allclose(A @ z, [2.0, 0.0])

    def test_shape_error(self):
        with pytest.raises(ValueError):
            nnls_free(np.eye(2), np.ones(3))

    def test_iteration_limit(self):
        with pytest.raises(NnlsError):
            nnls_free(np.eye(3), np.ones(3), maxiter=1)

    @settings(max_examples=200, deadline=None)
    @given(
        A=arrays(np.float64, (4, 3), elements=finite),
        b=arrays(np.float64, (4,), elements=finite),
    )
    def test_matches_scipy_nnls(self, A, b):
        _, r_ref = scipy_nnls(A, b)
        z, r = nnls_free(A, b)
        assert np.all(z >= 0)
        assert r == pytest.approx(r_ref, rel=1e-8, abs=1e-8)

    @settings(max_examples=200, deadline=None)
    @given(
        A=arrays(np.float64, (3, 3), elements=finite),
        b=arrays(np.float64, (3,), elements=finite),
        free=arrays(np.bool_, (3,)),
    )
    def test_optimality_conditions(self, A, b, free):
        z, r = nnls_free(A, b, free=free)
        assert np.all(z[~free] >= 0)
        assert r == pytest.approx(np.linalg.norm(A @ z - b), abs=1e-12)
        assert _kkt_gap(A, b, z, free) <= 1e-9

    @settings(max_examples=40, deadline=None)
    @given(
        A=arrays(np.float64, (2, 2), elements=finite),
        b=arrays(np.float64, (2,), elements=finite),
        free=arrays(np.bool_, (2,)),
    )
    def test_matches_brute_force(self, A, b, free):
        _, r = nnls_free(A, b, free=free)
        assert r == pytest.approx(brute_force_distance(A, b, ~free), abs=1e-8)
