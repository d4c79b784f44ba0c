import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from probrom.linalg import EigenError, sample_covariance, symmetric_eigen

from conftest import jacobi_eigenvalues


def check_eigensystem(S, es):
    lam, V = es.eigenvalues, es.eigenvectors
    d = S.shape[0]
    assert np.all(np.diff(lam) <= 0)
    assert np.max(np.abs(V.T @ V - np.eye(d))) <= 1e-10
    idx = np.argmax(np.abs(V), axis=0)
    assert np.all(V[idx, np.arange(d)] >= 0)
    scale = max(np.max(np.abs(S)), 1e-300)
    assert np.max(np.abs(S - V @ np.diag(lam) @ V.T)) <= 1e-8 * scale
    assert abs(lam.sum() - np.trace(S)) <= 1e-8 * max(abs(np.trace(S)), scale)


class TestSampleCovariance:
    def test_single_realization_at_mean_is_zero(self):
        y = np.array([[1.0, 2.0, 3.0]])
        np.testing.assert_array_equal(sample_covariance(y, y[0]), np.zeros((3, 3)))

    def test_hand_example(self):
        S = sample_covariance([[1.0, 0.0], [-1.0, 0.0]], [0.0, 0.0])
        np.testing.assert_array_equal(S, [[1.0, 0.0], [0.0, 0.0]])

    def test_divides_by_n(self, rng):
        Y = rng.standard_normal((50, 4))
        mu = Y.mean(axis=0)
        np.testing.assert_allclose(sample_covariance(Y, mu), np.cov(Y.T, bias=True), atol=1e-14)

    def test_symmetric_and_psd(self, rng):
        Y = rng.standard_normal((300, 6)) @ rng.standard_normal((6, 6))
        S = sample_covariance(Y, Y.mean(axis=0))
        np.testing.assert_array_equal(S, S.T)
        assert np.linalg.eigvalsh(S).min() > -1e-12

    def test_partition_independent(self, rng):
        Y = rng.standard_normal((5000, 5))
        mu = Y.mean(axis=0)
        S = sample_covariance(Y, mu)
        # reference accumulated in extended precision
        X = (Y - mu).astype(np.longdouble)
        ref = (X.T @ X / len(Y)).astype(float)
        np.testing.assert_allclose(S, ref, rtol=1e-12, atol=1e-15)

    def test_trace_accuracy_large_n(self, rng):
        Y = 1.0 + 0.05 * rng.standard_normal((100_000, 3))
        mu = Y.mean(axis=0)
        S = sample_covariance(Y, mu)
        exact = float(np.sum(((Y - mu).astype(np.longdouble)) ** 2) / len(Y))
        assert abs(np.trace(S) - exact) <= 1e-10 * exact

    @pytest.mark.parametrize("bad_mean", [np.zeros(2), np.zeros(4)])
    def test_dimension_mismatch(self, bad_mean):
        with pytest.raises(ValueError):
            sample_covariance(np.ones((3, 3)), bad_mean)

    def test_empty(self):
        with pytest.raises(ValueError):
            sample_covariance(np.empty((0, 3)), np.zeros(3))


class TestSymmetricEigen:
    def test_identity(self):
        es = symmetric_eigen(np.eye(3))
        np.testing.assert_array_equal(es.eigenvalues, [1, 1, 1])
        np.testing.assert_array_equal(np.abs(es.eigenvectors), np.eye(3))
        check_eigensystem(np.eye(3), es)

    def test_diagonal(self):
        es = symmetric_eigen(np.diag([2.0, 5.0, 1.0]))
        np.testing.assert_array_equal(es.eigenvalues, [5, 2, 1])
        np.testing.assert_array_equal(es.eigenvectors, np.eye(3)[:, [1, 0, 2]])

    def test_random_6x6_against_jacobi(self, rng):
        A = rng.standard_normal((6, 6))
        S = A + A.T
        es = symmetric_eigen(S)
        check_eigensystem(S, es)
        np.testing.assert_allclose(es.eigenvalues, jacobi_eigenvalues(S), atol=1e-8)
        V, lam = es.eigenvectors, es.eigenvalues
        assert np.max(np.abs(S - V @ np.diag(lam) @ V.T)) <= 1e-10 * np.max(np.abs(S))

    def test_jacobi_oracle_sanity(self):
        np.testing.assert_allclose(jacobi_eigenvalues([[2.0, 1.0], [1.0, 2.0]]), [3.0, 1.0], atol=1e-14)

    def test_rejects_nonsymmetric(self):
        with pytest.raises(EigenError, match="not symmetric"):
            symmetric_eigen([[1.0, 2.0], [0.0, 1.0]])

    def test_rejects_non_square(self):
        with pytest.raises(EigenError):
            symmetric_eigen(np.ones((2, 3)))

    def test_deterministic_bytes(self, rng):
        A = rng.standard_normal((20, 20))
        S = A @ A.T
        a, b = symmetric_eigen(S), symmetric_eigen(S.copy())
        assert a.eigenvalues.tobytes() == b.eigenvalues.tobytes()
        assert a.eigenvectors.tobytes() == b.eigenvectors.tobytes()

    def test_repeated_eigenvalues_invariants(self, rng):
        Q, _ = np.linalg.qr(rng.standard_normal((5, 5)))
        S = Q @ np.diag([3.0, 3.0, 1.0, 1.0, 1.0]) @ Q.T
        S = 0.5 * (S + S.T)
        check_eigensystem(S, symmetric_eigen(S))

    @settings(max_examples=60, deadline=None)
    @given(arrays(np.float64, (7, 7), elements=st.floats(-10, 10, allow_nan=False, allow_subnormal=False)))
    def test_invariants_property(self, A):
        S = A + A.T
        check_eigensystem(S, symmetric_eigen(S))
