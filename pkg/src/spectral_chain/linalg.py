"""Dense complex matrix kernels used throughout the package.

All matrices are dense ``numpy.ndarray`` blocks of ``complex128``. New
matrices produced here are Fortran-ordered so that column blocks map to
contiguous panels for the BLAS. Every routine is pure: inputs are never
modified in place, so concurrent use on disjoint data is safe.
"""

from __future__ import annotations

import numpy as np
import scipy.linalg

__all__ = [
    "NotHermitianError",
    "NotPositiveDefiniteError",
    "RankDeficientError",
    "EigenSolverError",
    "hermitian_view",
    "gemm",
    "cholesky",
    "triangular_solve",
    "qr_orthonormalize",
    "hermitian_eig",
]


class NotHermitianError(ValueError):
    """Matrix fails the Hermitian symmetry check."""


class NotPositiveDefiniteError(ValueError):
    """Cholesky pivot is non-positive; the matrix is not a valid overlap."""


class RankDeficientError(ValueError):
    """Orthonormalization found (numerically) dependent columns.

    ``indices`` holds the offending column positions so the caller can
    replace them with fresh random data and retry.
    """

    def __init__(self, indices):
        self.indices = tuple(int(i) for i in indices)
        super().__init__(f"rank-deficient columns at {self.indices}")


class EigenSolverError(RuntimeError):
    """The dense eigensolver failed to converge (pathological input)."""


def _as_matrix(m):
    a = np.asarray(m)
    if a.ndim == 1:
        a = a[:, None]
    if not np.iscomplexobj(a) or a.dtype != np.complex128:
        a = a.astype(np.complex128)
    return a


def hermitian_view(m, tol=None):
    """Validate that ``m`` is Hermitian and return it as complex128.

    Parameters
    ----------
    m : (n, n) array_like
        Square matrix to check.
    tol : float, optional
        Allowed max-norm of ``m - m^H``. Defaults to ``1e-10 * max(1, |m|_max)``.

    Raises
    ------
    NotHermitianError
        If ``m`` is not square or the symmetry defect exceeds ``tol``.
    """
    a = _as_matrix(m)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise NotHermitianError(f"expected a square matrix, got shape {a.shape}")
    scale = np.abs(a).max() if a.size else 0.0
    if tol is None:
        tol = 1e-10 * max(1.0, scale)
    defect = np.abs(a - a.conj().T).max() if a.size else 0.0
    if defect > tol:
        raise NotHermitianError(f"symmetry defect {defect:.3e} exceeds tolerance {tol:.3e}")
    return a


_OPS = {"N": lambda m: m, "T": lambda m: m.T, "C": lambda m: m.conj().T}


def gemm(alpha, a, b, beta=0.0, c=None, trans_a="N", trans_b="N"):
    """General matrix-matrix product ``alpha * op(a) @ op(b) + beta * c``.

    ``trans_a`` / ``trans_b`` select ``op`` as identity (``"N"``),
    transpose (``"T"``) or conjugate transpose (``"C"``), as in BLAS.
    """
    if trans_a not in _OPS or trans_b not in _OPS:
        raise ValueError(f"unknown transpose flags ({trans_a!r}, {trans_b!r})")
    oa = _OPS[trans_a](_as_matrix(a))
    ob = _OPS[trans_b](_as_matrix(b))
    if oa.shape[1] != ob.shape[0]:
        raise ValueError(f"inner dimensions do not conform: {oa.shape} x {ob.shape}")
    out = alpha * (oa @ ob)
    if beta != 0.0:
        if c is None:
            raise ValueError("beta is nonzero but no c matrix was given")
        cm = _as_matrix(c)
        if cm.shape != out.shape:
            raise ValueError(f"c has shape {cm.shape}, expected {out.shape}")
        out = out + beta * cm
    elif c is not None and _as_matrix(c).shape != out.shape:
        raise ValueError("c does not conform to the product shape")
    return np.asfortranarray(out)


def cholesky(b):
    """Lower Cholesky factor ``L`` with ``L @ L^H = b`` and positive diagonal.

    Raises
    ------
    NotPositiveDefiniteError
        If a pivot is non-positive, i.e. ``b`` is not positive definite.
    """
    a = hermitian_view(b)
    try:
        l = np.linalg.cholesky(a)
    except np.linalg.LinAlgError as exc:
        raise NotPositiveDefiniteError(str(exc)) from exc
    return np.asfortranarray(l)


def triangular_solve(l, x, conjugate_transpose=False):
    """Solve ``L @ Z = X`` (or ``L^H @ Z = X``) for a lower-triangular ``L``.

    Never forms an inverse; uses backward-stable substitution.
    """
    lm = _as_matrix(l)
    xm = _as_matrix(x)
    if lm.shape[0] != lm.shape[1]:
        raise ValueError("triangular factor must be square")
    if lm.shape[0] != xm.shape[0]:
        raise ValueError(f"dimensions do not conform: {lm.shape} vs {xm.shape}")
    diag = np.diagonal(lm)
    if np.any(diag.real <= 0.0) or np.any(diag == 0.0):
        raise ValueError("triangular factor has a non-positive diagonal entry")
    z = scipy.linalg.solve_triangular(
        lm, xm, lower=True, trans="C" if conjugate_transpose else "N", check_finite=False
    )
    return np.asfortranarray(z)


def qr_orthonormalize(y):
    """Orthonormalize the columns of ``y`` via Householder QR.

    The returned ``q`` satisfies ``q^H q = I`` to ~1e-12 and spans the same
    columns as ``y`` when ``y`` has full column rank. Column phases are
    normalized so that the implicit R factor has a real positive diagonal;
    an already-orthonormal input is returned (numerically) unchanged.

    Raises
    ------
    RankDeficientError
        When a column's post-projection norm falls below ``1e-13 * |y|_F``.
        The caller is expected to replace the reported columns with fresh
        random vectors and retry.
    """
    ym = _as_matrix(y)
    rows, cols = ym.shape
    if rows < cols:
        raise ValueError(f"need rows >= cols, got {ym.shape}")
    q, r = np.linalg.qr(ym)
    d = np.diagonal(r)
    scale = np.linalg.norm(ym)
    dead = np.flatnonzero(np.abs(d) < 1e-13 * scale)
    if dead.size:
        raise RankDeficientError(dead)
    phases = d / np.abs(d)
    return np.asfortranarray(q * phases.conj())


def hermitian_eig(g, want_vectors=True):
    """Full eigendecomposition of a dense Hermitian matrix.

    Values are returned in ascending order; vectors (when requested) are
    the matching orthonormal columns. Backed by LAPACK's Householder
    tridiagonalization plus implicitly shifted QL/QR iteration.

    Parameters
    ----------
    g : (n, n) array_like, Hermitian
    want_vectors : bool
        When False only the eigenvalues are computed.

    Returns
    -------
    values : (n,) float ndarray, ascending
    vectors : (n, n) complex ndarray or None
    """
    a = hermitian_view(g)
    try:
        if want_vectors:
            values, vectors = np.linalg.eigh(a)
            return values, np.asfortranarray(vectors)
        return np.linalg.eigvalsh(a), None
    except np.linalg.LinAlgError as exc:
        raise EigenSolverError(str(exc)) from exc
