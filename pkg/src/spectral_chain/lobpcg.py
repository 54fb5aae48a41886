"""Block locally-optimal conjugate gradient eigensolver, unpreconditioned.

Each iteration performs a Rayleigh-Ritz projection onto the trial space
spanned by the current Ritz block X, the residual block R and the previous
direction block P. The solver runs deliberately without a preconditioner
and accepts either a standard Hermitian operator or a generalized pencil
(B-inner products throughout). The block is padded by 5% over the number
of requested pairs and the stopping criterion checks only the ``nev``
lowest pairs, so a single run reaches full accuracy without restarts.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass

import numpy as np

from ._util import as_rng, random_block
from .chfsi import SolveReport
from .linalg import RankDeficientError, hermitian_eig, hermitian_view
from .reduction import EigenSolution

__all__ = [
    "LobpcgConfig",
    "IllConditionedBasisError",
    "lobpcg_solve",
    "lobpcg_solve_generalized",
]


class IllConditionedBasisError(RuntimeError):
    """The B-Gram matrix of the trial basis lost positive definiteness
    beyond repair (every candidate direction was dropped repeatedly)."""


@dataclass
class LobpcgConfig:
    """Solver parameters; ``blk`` defaults to ``ceil(1.05 * nev)``."""

    nev: int
    blk: int | None = None
    tol: float = 1e-10
    max_iter: int = 1000

    def resolve(self, n):
        blk = self.blk if self.blk is not None else math.ceil(1.05 * self.nev)
        blk = min(blk, n)
        if not (1 <= self.nev <= blk <= n):
            raise ValueError(f"need 1 <= nev <= blk <= n, got nev={self.nev}, blk={blk}, n={n}")
        if self.tol <= 0 or self.max_iter < 0:
            raise ValueError("tolerance must be positive and max_iter non-negative")
        return blk, self.tol, self.max_iter


# Directions whose post-orthogonalization B-norm falls under this fraction
# of the largest one are dropped from the trial basis (Gram eigenvalues go
# as the squared norms, hence the square below).
_DROP_NORM = 1e-8

# Converged columns keep contributing their residual/direction components
# until the residual sits well below tol; dropping exactly at tol starves
# clustered pairs of their partners' directions and stalls the tail.
_RETIRE_FACTOR = 1e-4


def _whiten(block, b_block):
    """Orthonormalize ``block`` in the (B-)inner product via its Gram matrix.

    Eigenvalue filtering of the Gram matrix drops directions with
    post-orthogonalization norm below ``_DROP_NORM`` of the largest,
    repairing rank deficiency and indefiniteness in one step. Returns the
    transform or None when nothing survives.
    """
    gram = block.conj().T @ b_block
    gram = (gram + gram.conj().T) / 2
    w, u = hermitian_eig(gram)
    if w.size == 0 or w[-1] <= 0.0:
        return None
    keep = w > w[-1] * _DROP_NORM**2
    if not keep.any():
        return None
    return u[:, keep] / np.sqrt(w[keep])


def _lobpcg(a, b, cfg, guess, rng, label, record_history=False):
    t0 = time.perf_counter()
    rng = as_rng(rng)
    a = hermitian_view(a)
    n = a.shape[0]
    blk, tol, max_iter = cfg.resolve(n)
    generalized = b is not None
    if generalized:
        b = hermitian_view(b)
    report = SolveReport()

    def bmul(z):
        return b @ z if generalized else z

    if guess is not None:
        x = np.array(np.asarray(guess, dtype=np.complex128), copy=True)
        if x.shape != (n, blk):
            raise ValueError(f"guess block must be {n}x{blk}, got {x.shape}")
    else:
        x = random_block(rng, n, blk)

    def repair_candidates(cand):
        """(B-)orthonormalize candidate directions against x and themselves,
        replacing the whole set with a random direction if all degenerate."""
        for attempt in range(4):
            for _ in range(2):
                cand = cand - x @ (bx.conj().T @ cand)
            b_cand = bmul(cand)
            t = _whiten(cand, b_cand)
            if t is not None:
                cand = cand @ t
                b_cand = b_cand @ t if generalized else cand
                # one refinement pass when the ill-conditioned B-geometry
                # left the whitened Gram visibly off identity
                defect = np.abs(cand.conj().T @ b_cand - np.eye(cand.shape[1])).max()
                if defect <= 1e-10:
                    return cand, b_cand
                continue
            cand = random_block(rng, n, 1)
        if t is None:
            raise IllConditionedBasisError("trial basis degenerated beyond repair")
        return cand, b_cand

    # entry orthonormalization + Rayleigh-Ritz; exact guesses converge here
    bx = bmul(x)
    t = _whiten(x, bx)
    if t is None:
        raise RankDeficientError(range(x.shape[1]))
    x = x @ t
    bx = bx @ t if generalized else x
    ax = a @ x
    report.matvecs += x.shape[1]
    g = x.conj().T @ ax
    g = (g + g.conj().T) / 2
    lam, w = hermitian_eig(g)
    x = x @ w
    ax = ax @ w
    bx = bx @ w if generalized else x
    p = np.zeros((n, 0), dtype=np.complex128)
    ritz_scale = float(max(abs(lam[0]), abs(lam[-1])))

    converged = False
    iterations = 0
    res_norms = np.zeros(blk)
    for it in range(max_iter + 1):
        iterations = it
        if record_history:
            report.ritz_history.append(lam.copy())
        r = ax - bx * lam
        res_norms = np.linalg.norm(r, axis=0) / np.linalg.norm(x, axis=0)
        ritz_scale = max(ritz_scale, float(abs(lam[0])), float(abs(lam[-1])))
        if np.all(res_norms[: cfg.nev] <= tol):
            converged = True
            break
        if it == max_iter:
            break

        active = res_norms > tol * _RETIRE_FACTOR
        if not active.any():
            active = res_norms > 0  # keep something in play
        w_block = r[:, active]
        norms = np.linalg.norm(w_block, axis=0)
        w_block = w_block / np.where(norms > 0, norms, 1.0)
        cand = np.hstack([w_block, p[:, active]]) if p.shape[1] else w_block
        cand, b_cand = repair_candidates(cand)

        a_cand = a @ cand
        report.matvecs += cand.shape[1]
        s = np.hstack([x, cand])
        a_s = np.hstack([ax, a_cand])
        g = s.conj().T @ a_s
        g = (g + g.conj().T) / 2
        vals, c = hermitian_eig(g)
        lam = vals[:blk]
        c = c[:, :blk]
        x = s @ c
        ax = a_s @ c
        if generalized:
            b_s = np.hstack([bx, b_cand])
            bx = b_s @ c
        else:
            bx = x
        p = s[:, blk:] @ c[blk:, :]

    report.inner_loops = iterations
    report.converged = converged
    report.final_residuals = res_norms[: cfg.nev].copy()
    report.operator_norm_estimate = ritz_scale
    report.wall_time = time.perf_counter() - t0
    solution = EigenSolution(
        values=lam[: cfg.nev].copy(),
        vectors=x[:, : cfg.nev].copy(),
        form="generalized" if generalized else "standard",
        label=label,
    )
    return solution, report


def lobpcg_solve(h, cfg, guess=None, rng=None, label=1, record_history=False):
    """Lowest ``cfg.nev`` eigenpairs of a standard Hermitian problem.

    Parameters
    ----------
    h : (n, n) ndarray, Hermitian
    cfg : LobpcgConfig
    guess : (n, blk) ndarray, optional
        Approximate eigenvectors used as the starting block. Exact
        eigenvectors converge at the entry residual check, i.e. after
        zero full iterations.
    rng : Generator or int seed, optional
    record_history : bool
        Store the Ritz values of every iteration in ``report.ritz_history``.

    Returns
    -------
    (EigenSolution, SolveReport)
        Standard-form solution; ``report.inner_loops`` is the iteration
        count and ``report.matvecs`` the number of single-column operator
        applications.
    """
    return _lobpcg(h, None, cfg, guess, rng, label, record_history)


def lobpcg_solve_generalized(a, b, cfg, guess=None, rng=None, label=1, record_history=False):
    """Lowest eigenpairs of the pencil ``a x = lambda b x`` solved directly.

    Identical recurrence with B-inner products throughout: the trial basis
    is kept B-orthonormal and residuals are ``a x - lambda b x``. With
    ``b = I`` the iterates coincide with :func:`lobpcg_solve` on the same
    seed. Ill-conditioned ``b`` degrades the trial-basis geometry, which is
    repaired by dropping offending directions; expect markedly slower
    convergence than reduce-to-standard-then-solve in that regime.
    """
    return _lobpcg(a, b, cfg, guess, rng, label, record_history)
