import numpy as np
import pytest
import scipy.sparse as sp
from hypothesis import given
from hypothesis import strategies as st

from conftest import cliques, graphs, path, random_graph
from sparseclust.errors import ConvergenceError, InputError
from sparseclust.graph import WeightedGraph, laplacian, normalized_laplacian
from sparseclust.linalg import (
    check_symmetric,
    laplacian_pinv,
    psd_between,
    pseudo_solve,
    sandwich_bounds,
    smallest_eigpairs,
)


def _random_psd(rng, n, rank=None):
    rank = n if rank is None else rank
    X = rng.standard_normal((n, rank))
    return X @ X.T


class TestEigen:
    def test_kernel_of_normalized_laplacian(self):
        g = random_graph(np.random.default_rng(0), 30, 0.3, 0.5, 2.0)
        pairs = smallest_eigpairs(normalized_laplacian(g), 1)
        assert abs(pairs.values[0]) < 1e-9
        f = np.sqrt(g.degrees())
        f /= np.linalg.norm(f)
        assert abs(abs(pairs.vectors[:, 0] @ f) - 1) < 1e-8

    @pytest.mark.parametrize("method", ["dense", "lanczos"])
    def test_path3(self, method):
        pairs = smallest_eigpairs(normalized_laplacian(path(3)), 3, method=method)
        assert np.allclose(pairs.values, [0, 1, 2], atol=1e-8)

    @pytest.mark.parametrize("method", ["dense", "lanczos"])
    def test_disjoint_cliques(self, method):
        pairs = smallest_eigpairs(normalized_laplacian(cliques(4, 6)), 4, method=method)
        assert np.allclose(pairs.values, 0, atol=1e-8)

    def test_rejects_asymmetric(self):
        with pytest.raises(InputError):
            smallest_eigpairs(np.array([[1.0, 2.0], [0.0, 1.0]]), 1)
        with pytest.raises(InputError):
            check_symmetric(sp.csr_matrix(np.array([[1.0, 1.0], [0.0, 1.0]])))

    def test_rejects_bad_k(self):
        with pytest.raises(InputError):
            smallest_eigpairs(np.eye(3), 4)

    def test_convergence_error_carries_residual(self):
        g = random_graph(np.random.default_rng(1), 600, 0.02)
        with pytest.raises(ConvergenceError) as info:
            smallest_eigpairs(laplacian(g), 5, method="lanczos", max_dim=12, max_restarts=1, tol=1e-14)
        assert info.value.residual is not None and info.value.residual > 0

    @pytest.mark.parametrize("seed", range(6))
    def test_lanczos_matches_dense(self, seed):
        rng = np.random.default_rng(seed)
        n = int(rng.integers(20, 300))
        g = random_graph(rng, n, float(rng.uniform(0.05, 0.4)), 0.5, 2.0)
        k = int(rng.integers(1, 6))
        N = normalized_laplacian(g)
        it = smallest_eigpairs(N, k, method="lanczos", seed=seed)
        dense = np.linalg.eigvalsh(N.toarray())[:k]
        assert np.allclose(it.values, dense, atol=1e-6)
        A = N.toarray()
        for i in range(k):
            res = np.linalg.norm(A @ it.vectors[:, i] - it.values[i] * it.vectors[:, i])
            assert res <= 1e-8 * np.abs(A).sum(1).max() + 1e-12
        assert np.allclose(it.vectors.T @ it.vectors, np.eye(k), atol=1e-8)

    def test_large_graph_uses_iterative_path(self):
        g = random_graph(np.random.default_rng(3), 700, 0.02)
        pairs = smallest_eigpairs(normalized_laplacian(g), 3, seed=1)
        again = smallest_eigpairs(normalized_laplacian(g), 3, seed=1)
        assert np.array_equal(pairs.values, again.values)
        dense = np.linalg.eigvalsh(normalized_laplacian(g).toarray())[:3]
        assert np.allclose(pairs.values, dense, atol=1e-6)


class TestPseudoSolve:
    def test_scaled_identity(self):
        b = np.array([1.0, -2.0, 3.0])
        assert np.allclose(pseudo_solve(4.0 * np.eye(3), b), b / 4)

    def test_single_edge(self):
        x = pseudo_solve(laplacian(path(2)), np.array([1.0, -1.0]))
        assert np.allclose(x - x.mean(), [0.5, -0.5])

    def test_kernel_rhs_gives_zero(self):
        g = random_graph(np.random.default_rng(2), 15, 0.4)
        assert np.allclose(pseudo_solve(laplacian(g), np.ones(15)), 0)

    @given(graphs(min_n=2, max_n=15), st.integers(0, 2**31))
    def test_reconstructs_projection(self, g, seed):
        b = np.random.default_rng(seed).standard_normal(g.n)
        L = laplacian(g)
        x = pseudo_solve(L, b)
        P = np.eye(g.n) - laplacian_pinv(L) @ L.toarray()  # kernel projector
        target = b - P @ b
        assert np.linalg.norm(L @ x - target) <= 1e-7 * max(np.linalg.norm(b), 1e-300) + 1e-12

    @given(st.integers(2, 12), st.integers(0, 2**31))
    def test_random_dense_psd(self, n, seed):
        rng = np.random.default_rng(seed)
        rank = int(rng.integers(1, n + 1))
        K = _random_psd(rng, n, rank) + 1e-3 * (rank == n) * np.eye(n)
        b = rng.standard_normal(n)
        x = pseudo_solve(K, b)
        vals, vecs = np.linalg.eigh(K)
        Z = vecs[:, vals <= 1e-10 * vals.max()]
        target = b - Z @ (Z.T @ b)
        assert np.linalg.norm(K @ x - target) <= 1e-7 * np.linalg.norm(b)

    def test_iteration_cap(self):
        g = path(200)
        b = np.random.default_rng(0).standard_normal(200)
        with pytest.raises(ConvergenceError):
            pseudo_solve(laplacian(g), b, tol=1e-14, maxiter=3)


class TestSandwich:
    def test_identity_and_scaling(self):
        A = laplacian(random_graph(np.random.default_rng(4), 10, 0.5)).toarray()
        assert psd_between(A, A, 0.9, 1.1)
        assert psd_between(A, 2 * A, 1.5, 2.0)
        assert not psd_between(A, 2 * A, 0.5, 1.9)
        assert not psd_between(A, 2 * A, 2.1, 3.0)

    def test_kernel_leak_requires_row_span(self):
        A = laplacian(path(4)).toarray()
        B = A + 0.5 * np.eye(4)
        assert not psd_between(A, B, 1, 10)
        assert psd_between(A, B, 1, 10, row_span=True)

    def test_dimension_mismatch(self):
        with pytest.raises(InputError):
            psd_between(np.eye(2), np.eye(3), 0, 1)

    def test_exact_sparsifier_oracle(self):
        # B is built to sit strictly inside the [0.7, 1.3] band of A on range(A)
        rng = np.random.default_rng(5)
        g = random_graph(rng, 10, 0.5)
        A = laplacian(g).toarray()
        vals, vecs = np.linalg.eigh(A)
        scale = np.where(vals > 1e-9, rng.uniform(0.75, 1.25, 10), 0.0)
        B = (vecs * (vals * scale)) @ vecs.T
        assert psd_between(A, B, 0.7, 1.3)
        lo, hi = sandwich_bounds(A, B)
        assert 0.75 - 1e-9 <= lo and hi <= 1.25 + 1e-9

    @given(st.integers(2, 8), st.integers(0, 2**31))
    def test_transitivity(self, n, seed):
        rng = np.random.default_rng(seed)
        A = _random_psd(rng, n) + np.eye(n)
        M = rng.uniform(0.8, 1.2, n)
        V = np.linalg.qr(rng.standard_normal((n, n)))[0]
        Ah = np.linalg.cholesky(A)
        B = Ah @ V @ np.diag(M) @ V.T @ Ah.T
        M2 = rng.uniform(0.9, 1.3, n)
        Bh = np.linalg.cholesky(B)
        C = Bh @ V.T @ np.diag(M2) @ V @ Bh.T
        lo1, hi1 = sandwich_bounds(A, B)
        lo2, hi2 = sandwich_bounds(B, C)
        assert psd_between(A, B, lo1, hi1) and psd_between(B, C, lo2, hi2)
        assert psd_between(A, C, lo1 * lo2, hi1 * hi2)
