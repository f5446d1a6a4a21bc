"""Symmetric eigen-solvers, pseudo-inverse solves and PSD-ordering checks."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp
from scipy.sparse.csgraph import connected_components as _cc

from .errors import ConvergenceError, InputError

DENSE_EIG_MAX_N = 512


@dataclass(frozen=True)
class EigenPairs:
    values: np.ndarray  # ascending
    vectors: np.ndarray  # columns, orthonormal

    def __len__(self):
        return len(self.values)


def _as_dense(A) -> np.ndarray:
    return A.toarray() if sp.issparse(A) else np.asarray(A, dtype=np.float64)


def check_symmetric(A, rtol: float = 1e-12):
    """Raise InputError if ``A`` is not symmetric to ``rtol`` relative asymmetry."""
    if A.shape[0] != A.shape[1]:
        raise InputError("matrix must be square")
    if sp.issparse(A):
        diff = abs(A - A.T).max() if A.nnz else 0.0
        scale = abs(A).max() if A.nnz else 0.0
    else:
        A = np.asarray(A)
        diff = np.abs(A - A.T).max() if A.size else 0.0
        scale = np.abs(A).max() if A.size else 0.0
    if diff > rtol * max(scale, np.finfo(float).tiny):
        raise InputError(f"matrix is not symmetric (relative asymmetry {diff / scale:.3g})")


def _norm_bound(A) -> float:
    if sp.issparse(A):
        return float(abs(A).sum(axis=1).max()) if A.nnz else 0.0
    return float(np.abs(A).sum(axis=1).max()) if A.size else 0.0


def smallest_eigpairs(L, k: int, tol: float = 1e-8, seed=0, max_dim: int | None = None,
                      max_restarts: int = 20, method: str = "auto") -> EigenPairs:
    """The ``k`` smallest eigenpairs of a symmetric PSD matrix.

    Dense ``eigh`` up to ``DENSE_EIG_MAX_N``; above that a block Lanczos
    iteration with full reorthogonalization on the flipped operator
    ``sigma*I - L`` (``sigma`` a Gershgorin bound), restarted from the current
    Ritz vectors when the basis reaches ``max_dim``.
    """
    n = L.shape[0]
    if not 1 <= k <= n:
        raise InputError(f"need 1 <= k <= n, got k={k}, n={n}")
    check_symmetric(L)
    if method not in ("auto", "dense", "lanczos"):
        raise InputError(f"unknown eigen method {method!r}")
    if method == "dense" or (method == "auto" and n <= DENSE_EIG_MAX_N):
        vals, vecs = np.linalg.eigh(_as_dense(L))
        return EigenPairs(vals[:k].copy(), vecs[:, :k].copy())
    return _block_lanczos(L, k, tol, seed, max_dim, max_restarts)


def _orthonormalize_against(W, Q, rng):
    # two passes of classical Gram-Schmidt, then QR; refill rank-deficient columns
    for _ in range(2):
        if Q is not None and Q.shape[1]:
            W = W - Q @ (Q.T @ W)
    Z, R = np.linalg.qr(W)
    scale = max(np.abs(np.diag(R)).max(initial=0.0), 1.0)
    weak = np.abs(np.diag(R)) < 1e-10 * scale
    if weak.any():
        fill = rng.standard_normal((W.shape[0], int(weak.sum())))
        for _ in range(2):
            if Q is not None and Q.shape[1]:
                fill = fill - Q @ (Q.T @ fill)
            keep = Z[:, ~weak]
            fill = fill - keep @ (keep.T @ fill)
        Z[:, weak] = np.linalg.qr(fill)[0]
    return Z


def _block_lanczos(L, k, tol, seed, max_dim, max_restarts):
    n = L.shape[0]
    rng = np.random.default_rng(seed)
    norm = max(_norm_bound(L), np.finfo(float).tiny)
    sigma = norm
    block = min(n, max(k + 2, 4))
    if max_dim is None:
        max_dim = min(n, max(20 * block, 200))
    X = rng.standard_normal((n, block))
    best_res = np.inf
    for _ in range(max_restarts):
        Q = _orthonormalize_against(X, None, rng)
        basis = [Q]
        LQ = [L @ Q]
        while True:
            V = np.hstack(basis)
            LV = np.hstack(LQ)
            T = V.T @ LV
            T = 0.5 * (T + T.T)
            theta, S = np.linalg.eigh(T)
            Y = V @ S[:, :k]
            R = LV @ S[:, :k] - Y * theta[:k]
            res = np.linalg.norm(R, axis=0)
            best_res = min(best_res, float(res.max()) / norm)
            if res.max() <= tol * norm:
                return EigenPairs(theta[:k].copy(), Y)
            if V.shape[1] + block > max_dim:
                break
            W = sigma * basis[-1] - LQ[-1]
            Qn = _orthonormalize_against(W, V, rng)
            basis.append(Qn)
            LQ.append(L @ Qn)
        X = V @ S[:, :block]
    raise ConvergenceError(
        f"block Lanczos did not converge (best relative residual {best_res:.3g})", best_res
    )


# ---------------------------------------------------------------------------
# kernels and pseudo-inverse solves


def laplacian_kernel(K) -> np.ndarray | None:
    """Orthonormal basis of per-component constant vectors when ``K`` is a
    Laplacian (zero row sums); None otherwise."""
    n = K.shape[0]
    rowsum = np.asarray(K.sum(axis=1)).ravel()
    if np.abs(rowsum).max(initial=0.0) > 1e-9 * max(_norm_bound(K), 1.0):
        return None
    A = sp.csr_matrix(K) if sp.issparse(K) else sp.csr_matrix(np.asarray(K))
    A = A - sp.diags(A.diagonal())
    count, labels = _cc(A != 0, directed=False)
    Z = np.zeros((n, count))
    Z[np.arange(n), labels] = 1.0
    return Z / np.sqrt(np.bincount(labels, minlength=count))


def dense_kernel(K, rtol: float = 1e-10) -> np.ndarray:
    vals, vecs = np.linalg.eigh(_as_dense(K))
    cut = rtol * max(np.abs(vals).max(initial=0.0), np.finfo(float).tiny)
    return vecs[:, vals <= cut]


def project_off(b, Z):
    b = np.asarray(b, dtype=np.float64)
    if Z is None or Z.shape[1] == 0:
        return b.copy()
    return b - Z @ (Z.T @ b)


def pseudo_solve(K, b, tol: float = 1e-8, kernel=None, maxiter: int | None = None):
    """Conjugate gradients for ``K x = P b`` where ``P`` projects off ker(K).

    ``kernel`` is an orthonormal kernel basis; when omitted it is inferred
    (component indicators for Laplacians, a dense eigen-decomposition for
    other small dense matrices).  The returned ``x`` lies in range(K) and
    satisfies ``||K x - P b|| <= tol * ||b||``.
    """
    b = np.asarray(b, dtype=np.float64)
    n = K.shape[0]
    if b.shape[0] != n:
        raise InputError("dimension mismatch")
    if kernel is None:
        kernel = laplacian_kernel(K)
        if kernel is None and not sp.issparse(K):
            kernel = dense_kernel(K)
    rhs = project_off(b, kernel)
    bnorm = np.linalg.norm(b)
    x = np.zeros(n)
    if bnorm == 0 or np.linalg.norm(rhs) <= tol * bnorm:
        return x
    maxiter = 10 * n if maxiter is None else maxiter
    r = rhs.copy()
    p = r.copy()
    rr = r @ r
    target = tol * bnorm
    for _ in range(maxiter):
        Kp = K @ p
        Kp = project_off(Kp, kernel)
        pKp = p @ Kp
        if pKp <= 0:
            break
        a = rr / pKp
        x += a * p
        r -= a * Kp
        rr_new = r @ r
        if np.sqrt(rr_new) <= target:
            return project_off(x, kernel)
        p = r + (rr_new / rr) * p
        rr = rr_new
    res = np.linalg.norm(project_off(K @ x, kernel) - rhs)
    if res <= target:
        return project_off(x, kernel)
    raise ConvergenceError(f"CG did not converge (residual {res / bnorm:.3g})", res / bnorm)


def laplacian_pinv(L) -> np.ndarray:
    """Dense pseudo-inverse of a graph Laplacian.

    Uses ``pinv(L) = inv(L + P) - P`` with ``P`` the projector onto the
    per-component constant vectors, so a Cholesky factorization suffices.
    """
    Z = laplacian_kernel(L)
    if Z is None:
        raise InputError("matrix is not a Laplacian")
    P = Z @ Z.T
    M = _as_dense(L) + P
    return sla.cho_solve(sla.cho_factor(M, lower=True), np.eye(M.shape[0])) - P


def spd_inverse(M) -> np.ndarray:
    M = _as_dense(M)
    return sla.cho_solve(sla.cho_factor(M, lower=True), np.eye(M.shape[0]))


# ---------------------------------------------------------------------------
# spectral sandwich oracle


def generalized_range(A, B, rank_rtol: float = 1e-9):
    """Generalized eigenvalues of ``(B, A)`` on range(A), plus ``||B|| on ker(A)``."""
    A, B = _as_dense(A), _as_dense(B)
    if A.shape != B.shape or A.shape[0] != A.shape[1]:
        raise InputError("dimension mismatch")
    check_symmetric(A, 1e-10)
    check_symmetric(B, 1e-10)
    vals, vecs = np.linalg.eigh(A)
    top = max(np.abs(vals).max(initial=0.0), np.finfo(float).tiny)
    pos = vals > rank_rtol * top
    U = vecs[:, pos] / np.sqrt(vals[pos])
    M = U.T @ B @ U
    gen = np.linalg.eigvalsh(0.5 * (M + M.T)) if M.size else np.zeros(0)
    Z = vecs[:, ~pos]
    leak = float(np.linalg.norm(B @ Z, 2)) if Z.shape[1] else 0.0
    bscale = max(np.abs(B).max(initial=0.0), np.finfo(float).tiny)
    return gen, leak / bscale


def psd_between(A, B, lo: float, hi: float, row_span: bool = False, tol: float = 1e-8) -> bool:
    """True iff ``lo*A <= B <= hi*A`` in the Loewner order.

    With ``row_span`` the comparison is restricted to x in range(A); otherwise
    B must also vanish on ker(A).  Dense; meant for n up to a few thousand.
    """
    gen, leak = generalized_range(A, B)
    if not row_span and leak > tol:
        return False
    if gen.size == 0:
        return True
    return bool(gen.min() >= lo - tol and gen.max() <= hi + tol)


def sandwich_bounds(A, B, row_span: bool = True):
    """``(min, max)`` generalized eigenvalue of ``(B, A)`` on range(A)."""
    gen, leak = generalized_range(A, B)
    if gen.size == 0:
        return 1.0, 1.0
    hi = float(gen.max()) if row_span or leak <= 1e-8 else np.inf
    return float(gen.min()), hi
