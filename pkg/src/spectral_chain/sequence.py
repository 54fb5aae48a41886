"""Synthetic correlated pencil sequences and eigenvector correspondence.

The generator stands in for a self-consistent field loop: problem ``l+1``
is problem ``l`` plus a Hermitian perturbation whose magnitude decays
along the sequence, so eigenvectors of adjacent problems grow more and
more collinear. The analysis side matches eigenvectors of adjacent
solutions through the Cholesky-weighted cross-Gram matrix and reports the
deviation angles of the matched pairs.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from ._util import as_rng
from .linalg import NotPositiveDefiniteError, cholesky
from .reduction import EigenPencil, forward_transform

__all__ = [
    "CorrelationSchedule",
    "PencilSequence",
    "AngleReport",
    "generate_sequence",
    "match_eigenvectors",
    "angle_report",
]

# Geometric defaults for the perturbation decay. The decay ratio is chosen
# so that a 12-problem sequence ends with median deviation angles ~2e-4,
# the scale real self-consistent cycles settle into.
DEFAULT_EPS0 = 0.5
DEFAULT_DECAY = 0.45


@dataclass
class CorrelationSchedule:
    """Perturbation magnitudes between adjacent problems of a sequence.

    ``eps[i]`` scales the Hermitian update taking problem ``i+1`` to
    ``i+2``; the overlap matrix is perturbed ten times more weakly. When
    ``eps`` is omitted a geometric decay ``eps0 * decay**i`` is used.
    """

    length: int
    eps: list[float] | None = None
    perturb_b: bool = True
    b_cond_target: float = 1e6

    def __post_init__(self):
        if self.length < 1:
            raise ValueError("a sequence has at least one problem")
        if self.eps is None:
            self.eps = [DEFAULT_EPS0 * DEFAULT_DECAY**i for i in range(self.length - 1)]
        self.eps = [float(e) for e in self.eps]
        if len(self.eps) != self.length - 1:
            raise ValueError(f"need {self.length - 1} perturbation magnitudes, got {len(self.eps)}")
        # zero is allowed: it reproduces the previous problem exactly
        if any(e < 0 for e in self.eps):
            raise ValueError("perturbation magnitudes must be non-negative")
        if self.b_cond_target < 1:
            raise ValueError("condition target must be >= 1")

    @classmethod
    def geometric(cls, length, eps0=DEFAULT_EPS0, decay=DEFAULT_DECAY, **kwargs):
        """Geometric decay schedule ``eps0 * decay**i``; decay in (0, 1]."""
        if eps0 <= 0 or not 0 < decay <= 1:
            raise ValueError("need eps0 > 0 and 0 < decay <= 1")
        eps = [eps0 * decay**i for i in range(length - 1)]
        return cls(length=length, eps=eps, **kwargs)


@dataclass
class PencilSequence:
    """Ordered pencils labeled 1..N, all of one dimension."""

    pencils: list[EigenPencil]
    provenance: dict = field(default_factory=dict)

    def __post_init__(self):
        if not self.pencils:
            raise ValueError("empty sequence")
        n = self.pencils[0].n
        for i, p in enumerate(self.pencils):
            if p.label != i + 1:
                raise ValueError(f"labels must run 1..N, found {p.label} at position {i}")
            if p.n != n:
                raise ValueError("all pencils must share one dimension")

    def __len__(self):
        return len(self.pencils)

    @property
    def n(self):
        return self.pencils[0].n


@dataclass
class AngleReport:
    """Deviation angles between matched eigenvectors of adjacent problems.

    Keyed by the first label of each adjacent pair (1..N-1): ``angles[l]``
    are the radians for the tracked pairs of (l, l+1), ``matching[l]`` the
    column permutation, ``median_angles[l]`` the per-pair median.
    """

    angles: dict[int, np.ndarray] = field(default_factory=dict)
    matching: dict[int, np.ndarray] = field(default_factory=dict)
    median_angles: dict[int, float] = field(default_factory=dict)


def _random_hermitian(rng, n):
    g = (rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))) / np.sqrt(2)
    return (g + g.conj().T) / 2


def _unit_maxnorm_hermitian(rng, n):
    d = _random_hermitian(rng, n)
    return d / np.abs(d).max()


def _random_spd(rng, n, cond):
    """SPD matrix with log-spaced eigenvalues in [1, cond].

    Keeping the smallest eigenvalue at 1 (rather than 1/cond) leaves the
    additive perturbations far from breaking positive definiteness while
    fixing the condition number exactly.
    """
    g = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    q, _ = np.linalg.qr(g)
    vals = np.logspace(0.0, np.log10(cond), n)
    m = (q * vals) @ q.conj().T
    return (m + m.conj().T) / 2


def generate_sequence(n, schedule, seed=None):
    """Generate a correlated sequence of ``schedule.length`` pencils.

    The first Hamiltonian is a random Hermitian matrix (standard complex
    Gaussian entries, symmetrized); the first overlap is SPD with condition
    ``schedule.b_cond_target``. Each following problem adds ``eps[i]``
    times a fresh unit-max-norm Hermitian update to the Hamiltonian and
    a ten-times weaker one to the overlap, re-checking positive
    definiteness (halving the overlap update up to 5 times on failure).
    """
    if n < 4:
        raise ValueError("need dimension >= 4")
    rng = as_rng(seed)
    a = _random_hermitian(rng, n)
    b = _random_spd(rng, n, schedule.b_cond_target)
    pencils = [EigenPencil(a=a, b=b, label=1)]
    for i, eps in enumerate(schedule.eps):
        a = a + eps * _unit_maxnorm_hermitian(rng, n)
        if schedule.perturb_b:
            db = _unit_maxnorm_hermitian(rng, n)
            scale = eps / 10
            for attempt in range(6):
                candidate = b + scale * db
                try:
                    cholesky(candidate)
                    break
                except NotPositiveDefiniteError:
                    if attempt == 5:
                        raise
                    scale /= 2
            b = candidate
        pencils.append(EigenPencil(a=a, b=b, label=i + 2))
    provenance = {
        "kind": "generated",
        "n": n,
        "length": schedule.length,
        "eps": list(schedule.eps),
        "perturb_b": schedule.perturb_b,
        "b_cond_target": schedule.b_cond_target,
        "seed": None if isinstance(seed, np.random.Generator) else seed,
    }
    return PencilSequence(pencils=pencils, provenance=provenance)


def _standard_vectors(sol, l_factor):
    if sol.form == "standard":
        return sol.vectors
    return forward_transform(l_factor, sol.vectors)


def match_eigenvectors(sol_prev, l_prev, sol_next, l_next):
    """One-to-one eigenvector correspondence between adjacent solutions.

    The cross-Gram ``M = (L_prev^H X_prev)^H (L_next^H X_next)`` is built
    from generalized-form vectors (standard-form inputs already are the
    ``L^H x`` products). Because adjacent problems are strongly correlated,
    ``|M|`` is lumpy with dominant entries near the diagonal, so a greedy
    sweep over entries in descending magnitude, never reusing a row or a
    column, recovers the association. The deviation angle of a matched
    pair is ``arccos(min(1, |M[i, sigma[i]]|))``.

    Returns
    -------
    sigma : (m,) int ndarray
        ``sigma[i]`` is the next-solution column matched to previous
        column ``i``.
    theta : (m,) float ndarray
        Deviation angles in radians, in previous-column order.
    """
    y_prev = _standard_vectors(sol_prev, l_prev)
    y_next = _standard_vectors(sol_next, l_next)
    if y_prev.shape[0] != y_next.shape[0]:
        raise ValueError("solutions live in different dimensions")
    m = min(y_prev.shape[1], y_next.shape[1])
    gram = np.abs(y_prev[:, :m].conj().T @ y_next[:, :m])
    work = gram.copy()
    sigma = np.full(m, -1, dtype=int)
    for _ in range(m):
        i, j = np.unravel_index(np.argmax(work), work.shape)
        sigma[i] = j
        work[i, :] = -1.0
        work[:, j] = -1.0
    theta = np.arccos(np.minimum(1.0, gram[np.arange(m), sigma]))
    return sigma, theta


def angle_report(seq, solutions, fraction=1.0):
    """Per-pair deviation angles for consecutive solutions of a sequence.

    ``solutions`` holds one solution per pencil of ``seq`` (matching
    order). For each adjacent pair the lowest ``ceil(fraction * nev)``
    vectors are matched. Missing entries raise; Cholesky factors needed
    for generalized-form arithmetic are recomputed from the pencils.
    """
    if not 0 < fraction <= 1:
        raise ValueError("fraction must be in (0, 1]")
    if len(solutions) != len(seq):
        raise ValueError(f"need one solution per pencil ({len(seq)}), got {len(solutions)}")
    report = AngleReport()
    factors = {}

    def factor(idx):
        if idx not in factors:
            factors[idx] = cholesky(seq.pencils[idx].b)
        return factors[idx]

    for idx in range(len(seq) - 1):
        sol_a, sol_b = solutions[idx], solutions[idx + 1]
        if sol_a is None or sol_b is None:
            raise ValueError(f"missing solution for adjacent labels {idx + 1}, {idx + 2}")
        tracked = max(1, int(np.ceil(fraction * min(sol_a.nev, sol_b.nev))))
        la = factor(idx) if sol_a.form == "generalized" else None
        lb = factor(idx + 1) if sol_b.form == "generalized" else None
        trimmed_a = replace(sol_a, values=sol_a.values[:tracked], vectors=sol_a.vectors[:, :tracked])
        trimmed_b = replace(sol_b, values=sol_b.values[:tracked], vectors=sol_b.vectors[:, :tracked])
        sigma, theta = match_eigenvectors(trimmed_a, la, trimmed_b, lb)
        label = idx + 1
        report.angles[label] = theta
        report.matching[label] = sigma
        report.median_angles[label] = float(np.median(theta))
    return report
