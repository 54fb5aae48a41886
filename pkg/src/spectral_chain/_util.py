"""Small shared helpers."""

from __future__ import annotations

import numpy as np


def as_rng(seed_or_rng):
    """Coerce ``None``, an int seed, a seed tuple or a Generator to a Generator."""
    if isinstance(seed_or_rng, np.random.Generator):
        return seed_or_rng
    return np.random.default_rng(seed_or_rng)


def random_block(rng, n, cols):
    """i.i.d. standard complex Gaussian block, Fortran-ordered."""
    z = rng.standard_normal((n, cols)) + 1j * rng.standard_normal((n, cols))
    return np.asfortranarray(z)
