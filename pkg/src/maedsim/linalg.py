"""Dense complex linear algebra used throughout the package.

Matrices are plain ``numpy`` arrays of dtype ``complex128`` in C (row-major)
order; vectors are 1-D arrays. Every routine is a pure function.
"""

import numpy as np
import scipy.linalg

from .errors import ConvergenceError, DimensionError, NotPositiveDefiniteError

__all__ = [
    "as_matrix",
    "matmul",
    "hermitian",
    "frobenius_norm_sq",
    "inv_hermitian_posdef",
    "solve_hermitian_posdef",
    "right_pseudo_inverse",
    "orth_complement_projector",
    "dominant_eigenvector",
    "power_step",
]


def as_matrix(a):
    a = np.asarray(a, dtype=np.complex128)
    if a.ndim != 2:
        raise DimensionError(f"expected a 2-D matrix, got shape {a.shape}")
    return a


def _as_vector(v):
    v = np.asarray(v, dtype=np.complex128)
    if v.ndim != 1 or v.size == 0:
        raise DimensionError(f"expected a non-empty 1-D vector, got shape {v.shape}")
    return v


def matmul(A, B):
    A, B = as_matrix(A), as_matrix(B)
    if A.shape[1] != B.shape[0]:
        raise DimensionError(f"cannot multiply {A.shape} by {B.shape}")
    return A @ B


def hermitian(A):
    """Conjugate transpose."""
    return as_matrix(A).conj().T


def frobenius_norm_sq(A):
    a = np.asarray(A)
    return float(np.vdot(a, a).real)


_potrf, _potri = scipy.linalg.get_lapack_funcs(("potrf", "potri"), dtype=np.complex128)


def inv_hermitian_posdef(G):
    """Inverse of a Hermitian positive definite matrix via its Cholesky factor.

    Raises
    ------
    NotPositiveDefiniteError
        If the factorization breaks down or ``G`` is numerically singular.
    """
    G = as_matrix(G)
    if G.shape[0] != G.shape[1]:
        raise DimensionError(f"G must be square, got {G.shape}")
    if not np.all(np.isfinite(G)):
        raise NotPositiveDefiniteError("Gram matrix has non-finite entries")
    L, info = _potrf(G, lower=True, clean=True)
    if info != 0:
        raise NotPositiveDefiniteError(f"Cholesky factorization failed at pivot {info}")
    # potrf accepts near-singular matrices whose pivots are tiny but positive;
    # the squared pivot ratio lower-bounds the condition number (reject >= 1e12)
    diag = np.abs(np.diag(L))
    if diag.min() <= 1e-6 * diag.max():
        raise NotPositiveDefiniteError("Gram matrix is numerically singular")
    Ginv, info = _potri(L, lower=True)
    if info != 0:
        raise NotPositiveDefiniteError(f"Cholesky inverse failed ({info})")
    # potri fills only the lower triangle
    Ginv = np.tril(Ginv)
    Ginv += np.tril(Ginv, -1).conj().T
    return Ginv


def solve_hermitian_posdef(G, B):
    """Solve ``G X = B`` for Hermitian positive definite ``G`` via Cholesky.

    Systems here are at most a few hundred unknowns, so the explicit
    Cholesky-based inverse is both fast and accurate enough.

    Raises
    ------
    NotPositiveDefiniteError
        If the factorization breaks down or the result is not finite.
    """
    G = as_matrix(G)
    B = np.asarray(B, dtype=np.complex128)
    if G.shape[0] != G.shape[1] or B.shape[0] != G.shape[0]:
        raise DimensionError(f"cannot solve {G.shape} system with rhs {B.shape}")
    X = inv_hermitian_posdef(G) @ B
    if not np.all(np.isfinite(X)):
        raise NotPositiveDefiniteError("non-finite solution")
    return X


def right_pseudo_inverse(S):
    """Right Moore-Penrose inverse ``S^H (S S^H)^{-1}`` of a full-row-rank ``S``."""
    S = as_matrix(S)
    if S.shape[0] > S.shape[1]:
        raise DimensionError(f"right pseudo-inverse needs rows <= cols, got {S.shape}")
    gram = S @ S.conj().T
    # G^{-1} S is (S^dagger)^H since G is Hermitian
    return solve_hermitian_posdef(gram, S).conj().T


def orth_complement_projector(p):
    """Projector ``I - p p^H / ||p||^2`` onto the orthogonal complement of span(p)."""
    p = _as_vector(p)
    nrm_sq = float(np.vdot(p, p).real)
    if not nrm_sq > 0.0:
        raise DimensionError("cannot build a projector from the zero vector")
    P = -np.outer(p, p.conj()) / nrm_sq
    P[np.diag_indices_from(P)] += 1.0
    return P


def _check_square(M):
    M = as_matrix(M)
    if M.shape[0] != M.shape[1]:
        raise DimensionError(f"expected a square matrix, got {M.shape}")
    return M


def dominant_eigenvector(M, tol=1e-6, max_iter=500, seed_vector=None):
    """Unit-norm eigenvector of the largest eigenvalue of a Hermitian PSD matrix.

    Plain power iteration. Stops once ``||M v - lam v|| <= tol * lam`` with
    ``lam = v^H M v``. The global phase of the result is arbitrary.

    Parameters
    ----------
    M : (n, n) array
        Hermitian positive semidefinite matrix.
    tol : float
        Relative eigen-residual target.
    max_iter : int
        Maximum number of matrix-vector products.
    seed_vector : (n,) array, optional
        Starting vector. Defaults to the column of ``M`` with the largest
        norm, which keeps the routine deterministic.

    Raises
    ------
    ConvergenceError
        If ``max_iter`` is reached first. ``err.best`` holds the iterate with
        the smallest relative residual.
    """
    M = _check_square(M)
    n = M.shape[0]
    if seed_vector is None:
        norms = np.einsum("ij,ij->j", M.conj(), M).real
        v = M[:, int(np.argmax(norms))].copy()
        if not np.any(v):
            v = np.ones(n, dtype=np.complex128)
    else:
        v = _as_vector(seed_vector).copy()
        if v.shape[0] != n:
            raise DimensionError(f"seed vector of length {v.shape[0]} for {M.shape} matrix")
    v /= np.linalg.norm(v)

    best, best_res = v, np.inf
    for _ in range(max_iter + 1):
        Mv = M @ v
        lam = float(np.vdot(v, Mv).real)
        res = float(np.linalg.norm(Mv - lam * v))
        if lam <= 0.0:
            # zero matrix: every unit vector is a dominant eigenvector
            if not np.any(M):
                return v
            rel = np.inf
        else:
            rel = res / lam
            if rel <= tol:
                return v
        if rel < best_res:
            best, best_res = v, rel
        nrm = np.linalg.norm(Mv)
        if nrm == 0.0:
            break
        v = Mv / nrm
    raise ConvergenceError(
        f"power iteration did not reach tol={tol:g} in {max_iter} iterations "
        f"(best relative residual {best_res:.3g})",
        best=best,
        residual=best_res,
    )


def power_step(M, v):
    """One power-method step ``M v / ||M v||``.

    Raises
    ------
    ConvergenceError
        If ``M v`` vanishes; ``err.best`` is the input vector.
    """
    M = _check_square(M)
    v = _as_vector(v)
    if not np.linalg.norm(v) > 0.0:
        raise DimensionError("power step from the zero vector")
    Mv = M @ v
    nrm = np.linalg.norm(Mv)
    if not nrm > 0.0 or not np.isfinite(nrm):
        raise ConvergenceError("M v vanished in power step", best=v)
    return Mv / nrm
