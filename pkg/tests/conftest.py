import numpy as np
import pytest


def random_hermitian(rng, n, scale=1.0):
    g = (rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))) / np.sqrt(2)
    return scale * (g + g.conj().T) / 2


def random_spd(rng, n, cond=100.0):
    """SPD matrix with exactly log-spaced eigenvalues in [1, cond]."""
    g = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    q, _ = np.linalg.qr(g)
    vals = np.logspace(0.0, np.log10(cond), n)
    m = (q * vals) @ q.conj().T
    return (m + m.conj().T) / 2


def random_unitary(rng, n):
    g = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    q, r = np.linalg.qr(g)
    return q * (np.diagonal(r) / np.abs(np.diagonal(r))).conj()


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
