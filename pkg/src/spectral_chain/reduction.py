"""Generalized-to-standard pencil reduction and solution back-transform.

A pencil ``A x = lambda B x`` with Hermitian indefinite ``A`` and Hermitian
positive definite ``B`` is reduced through the Cholesky factor ``B = L L^H``
to the standard operator ``H = L^{-1} A L^{-H}``, solved as ``H y = lambda y``
and mapped back via ``x = L^{-H} y``.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .linalg import cholesky, hermitian_view, triangular_solve

__all__ = [
    "EigenPencil",
    "StandardProblem",
    "EigenSolution",
    "to_standard",
    "back_transform",
    "forward_transform",
    "residual",
]


@dataclass(frozen=True)
class EigenPencil:
    """One generalized eigenproblem ``a x = lambda b x`` of a sequence.

    ``a`` is Hermitian indefinite, ``b`` Hermitian positive definite
    (positive definiteness is enforced when the Cholesky factor is taken).
    ``label`` is the position of the problem within its sequence.
    """

    a: np.ndarray
    b: np.ndarray
    label: int = 1

    def __post_init__(self):
        a = hermitian_view(self.a)
        b = hermitian_view(self.b)
        if a.shape != b.shape:
            raise ValueError(f"a and b differ in shape: {a.shape} vs {b.shape}")
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)

    @property
    def n(self):
        return self.a.shape[0]


@dataclass(frozen=True)
class StandardProblem:
    """Reduced operator ``h = L^{-1} a L^{-H}`` plus the factor for back-transform."""

    h: np.ndarray
    cholesky_factor: np.ndarray
    source_label: int = 1

    @property
    def n(self):
        return self.h.shape[0]


@dataclass
class EigenSolution:
    """A computed partial eigendecomposition.

    ``form`` is ``"standard"`` (orthonormal y-vectors of the reduced
    problem) or ``"generalized"`` (B-orthonormal x-vectors of the pencil).
    """

    values: np.ndarray
    vectors: np.ndarray
    form: str = "standard"
    label: int = 1

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float).ravel()
        self.vectors = np.asarray(self.vectors, dtype=np.complex128)
        if self.vectors.ndim == 1:
            self.vectors = self.vectors[:, None]
        if self.form not in ("standard", "generalized"):
            raise ValueError(f"unknown solution form {self.form!r}")
        if self.vectors.shape[1] != self.values.size:
            raise ValueError("one vector per value required")

    @property
    def nev(self):
        return self.values.size

    def orthonormality_defect(self, b=None):
        """Max-norm deviation of the (B-)Gram matrix from the identity."""
        v = self.vectors
        bv = v if b is None else np.asarray(b) @ v
        gram = v.conj().T @ bv
        return float(np.abs(gram - np.eye(v.shape[1])).max())


def to_standard(pencil):
    """Reduce a pencil to standard form via two triangular solves.

    The inverse of ``L`` is never formed. The result is explicitly
    re-symmetrized as ``(h + h^H)/2``: the solves leave an ``~1e-14``
    asymmetry that downstream Hermitian checks would reject.
    """
    l = cholesky(pencil.b)
    z = triangular_solve(l, pencil.a)
    h = triangular_solve(l, z.conj().T)
    h = (h + h.conj().T) / 2
    return StandardProblem(h=h, cholesky_factor=l, source_label=pencil.label)


def forward_transform(l, vectors):
    """Map generalized-form vectors to standard form: ``y = L^H x``."""
    lm = np.asarray(l)
    return lm.conj().T @ np.asarray(vectors)


def back_transform(l, sol):
    """Map a standard-form solution to generalized form: ``x = L^{-H} y``.

    Eigenvalues are unchanged; the returned vectors are B-orthonormal for
    the pencil that produced ``l``.
    """
    if sol.form != "standard":
        raise ValueError("back_transform expects a standard-form solution")
    lm = np.asarray(l)
    if lm.shape[0] != sol.vectors.shape[0]:
        raise ValueError(f"factor dimension {lm.shape[0]} does not match vectors")
    x = triangular_solve(lm, sol.vectors, conjugate_transpose=True)
    return replace(sol, vectors=x, form="generalized")


def residual(problem, value, vector):
    """Relative eigenpair residual ``|M v - lambda (B) v|_2 / |v|_2``.

    ``problem`` is an :class:`EigenPencil` (B-weighted right-hand side) or a
    :class:`StandardProblem` / plain Hermitian matrix (B absent).
    """
    v = np.asarray(vector, dtype=np.complex128).ravel()
    vnorm = np.linalg.norm(v)
    if vnorm == 0.0:
        raise ValueError("residual of the zero vector is undefined")
    if isinstance(problem, EigenPencil):
        r = problem.a @ v - value * (problem.b @ v)
    elif isinstance(problem, StandardProblem):
        r = problem.h @ v - value * v
    else:
        m = hermitian_view(problem)
        r = m @ v - value * v
    return float(np.linalg.norm(r) / vnorm)
