import itertools

import numpy as np
import pytest
import scipy.linalg
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays
from numpy.testing import assert_allclose

from dcgrid.errors import InvalidInputError, NumericFailureError
from dcgrid.kernels import rk4_trajectory_numpy
from dcgrid.numerics import EIG_RTOL, eig, expm, psd_check, rank_tol, solve, zero_semisimple


def _random_stable(rng, n):
    A = rng.normal(size=(n, n))
    shift = np.linalg.eigvals(A).real.max() + rng.uniform(0.1, 2.0)
    return A - shift * np.eye(n)


class TestEig:
    def test_rotation(self):
        w = eig([[0.0, 1.0], [-1.0, 0.0]]).eigenvalues
        assert_allclose(w, [-1j, 1j], atol=1e-14)

    def test_diagonal(self):
        assert_allclose(eig(np.diag([3.0, 2.0])).eigenvalues, [2.0, 3.0])

    def test_product_matches_lu_determinant(self, rng):
        for _ in range(20):
            A = rng.normal(size=(8, 8))
            lu, piv = scipy.linalg.lu_factor(A)
            det = np.prod(np.diag(lu)) * (-1) ** np.count_nonzero(piv != np.arange(8))
            prod = np.prod(eig(A).eigenvalues)
            assert abs(prod.imag) <= 1e-8 * abs(det)
            assert_allclose(prod.real, det, rtol=1e-8)

    def test_residuals_on_random_matrices(self, rng):
        for _ in range(1000):
            n = int(rng.integers(2, 13))
            A = rng.normal(size=(n, n)) * 10 ** rng.uniform(-3, 3)
            s = eig(A)
            assert len(s) == n
            normA = np.linalg.norm(A, 2)
            res = np.linalg.norm(A @ s.right_eigenvectors - s.right_eigenvectors * s.eigenvalues, axis=0)
            assert np.all(res <= EIG_RTOL * normA * np.linalg.norm(s.right_eigenvectors, axis=0))

    def test_sorted_by_real_then_imag(self, rng):
        w = eig(rng.normal(size=(9, 9))).eigenvalues
        keys = list(zip(w.real, w.imag))
        assert keys == sorted(keys)

    def test_rejects_non_finite(self):
        with pytest.raises(InvalidInputError):
            eig([[np.nan, 0.0], [0.0, 1.0]])

    def test_rejects_non_square(self):
        with pytest.raises(InvalidInputError):
            eig(np.zeros((2, 3)))


class TestRank:
    def test_zero(self):
        assert rank_tol(np.zeros((3, 3))) == 0

    def test_connected_laplacian(self):
        L = np.array([[1, -1, 0, 0], [-1, 2, -1, 0], [0, -1, 2, -1], [0, 0, -1, 1]], float)
        assert rank_tol(L) == 3

    def test_triangle_laplacian(self):
        assert rank_tol([[2, -1, -1], [-1, 2, -1], [-1, -1, 2]]) == 2

    def test_rectangular(self):
        assert rank_tol(np.ones((2, 5))) == 1

    def test_bad_rtol(self):
        with pytest.raises(InvalidInputError):
            rank_tol(np.eye(2), rtol=0.0)

    @settings(max_examples=200, deadline=None)
    @given(n=st.integers(2, 7), k=st.integers(0, 7), seed=st.integers(0, 2**31),
           scale=st.floats(1e-6, 1e6).map(lambda x: x * (1 if int(x * 1e6) % 2 else -1)))
    def test_permutation_and_scale_invariant(self, n, k, seed, scale):
        rng = np.random.default_rng(seed)
        k = min(k, n)
        A = rng.normal(size=(n, k)) @ rng.normal(size=(k, n)) if k else np.zeros((n, n))
        r = rank_tol(A)
        assert r == k
        P, Q = np.eye(n)[rng.permutation(n)], np.eye(n)[rng.permutation(n)]
        assert rank_tol(P @ A @ Q) == r
        assert rank_tol(scale * A) == r


class TestSemisimple:
    def test_jordan_block(self):
        assert zero_semisimple(np.array([[0.0, 1.0], [0.0, 0.0]])) == (False, 1, 0)

    def test_diagonal(self):
        assert zero_semisimple(np.diag([0.0, -1.0])) == (True, 1, 1)

    def test_zero_matrix(self):
        assert zero_semisimple(np.zeros((3, 3))) == (True, 0, 0)

    def test_nonsingular(self):
        assert zero_semisimple(np.eye(3))[0]

    def test_agrees_with_squared_rank_when_well_conditioned(self, rng):
        for _ in range(200):
            n = int(rng.integers(2, 7))
            V = rng.normal(size=(n, n))
            J = np.diag(rng.uniform(-3, -0.5, n))
            z = int(rng.integers(1, n))
            J[:z, :z] = 0.0
            if z >= 2 and rng.random() < 0.5:
                J[0, 1] = 1.0
            A = V @ J @ np.linalg.inv(V)
            ok, r1, r2 = zero_semisimple(A)
            assert ok == (rank_tol(A) == rank_tol(A @ A, rtol=1e-7))


class TestPSD:
    def test_identity(self):
        assert psd_check(np.eye(4))

    def test_indefinite(self):
        assert not psd_check(np.diag([1.0, -1.0]))

    def test_hand_computed(self):
        assert psd_check(np.array([[2.0, -1.0], [-1.0, 2.0]]))

    def test_boundary_singular(self):
        assert psd_check(np.array([[1.0, 1.0], [1.0, 1.0]]))

    def test_rejects_asymmetric(self):
        with pytest.raises(InvalidInputError):
            psd_check(np.array([[1.0, 2.0], [0.0, 1.0]]))

    @settings(max_examples=200, deadline=None)
    @given(arrays(np.float64, (5, 5), elements=st.floats(-10, 10)), st.permutations(range(5)))
    def test_permutation_invariant(self, B, perm):
        S = B + B.T
        P = np.eye(5)[list(perm)]
        if psd_check(S):
            assert psd_check(P.T @ S @ P)
        G = B @ B.T
        assert psd_check(G) and psd_check(P.T @ G @ P)


class TestExpm:
    def test_zero(self):
        assert_allclose(expm(np.zeros((3, 3)), 7.0), np.eye(3))

    def test_scalar(self):
        assert_allclose(expm(np.array([[-1.0]]), 1.0), [[np.exp(-1.0)]], rtol=1e-15)

    def test_matches_rk4(self, rng):
        for _ in range(20):
            A = _random_stable(rng, 5)
            h = 0.01
            cols = [rk4_trajectory_numpy(A, np.zeros(5), e, h / 10, 1, 10)[0][-1] for e in np.eye(5)]
            assert_allclose(expm(A, h), np.column_stack(cols), rtol=1e-8, atol=1e-12)

    def test_semigroup(self, rng):
        for _ in range(50):
            A = _random_stable(rng, int(rng.integers(2, 8)))
            h1, h2 = rng.uniform(0, 2, 2)
            lhs = expm(A, h1 + h2)
            assert_allclose(lhs, expm(A, h1) @ expm(A, h2), rtol=1e-8, atol=1e-8 * np.abs(lhs).max())

    def test_negative_step(self):
        with pytest.raises(InvalidInputError):
            expm(np.eye(2), -1.0)

    def test_overflow(self):
        with pytest.raises(NumericFailureError):
            expm(np.array([[1000.0]]), 10.0)


def test_solve_refuses_singular():
    with pytest.raises(NumericFailureError, match="singular"):
        solve(np.ones((2, 2)), np.ones(2))


@pytest.mark.parametrize("n,k", list(itertools.product([3, 6], [1, 2])))
def test_rank_of_low_rank_products(rng, n, k):
    A = rng.normal(size=(n, k)) @ rng.normal(size=(k, n))
    assert rank_tol(A) == k
