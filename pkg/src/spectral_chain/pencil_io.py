"""Matrix Market persistence for pencils and sequences.

A sequence directory holds one pair of files per problem, ``A_<l>.mtx``
and ``B_<l>.mtx`` in Matrix Market array format with the complex Hermitian
field, plus a ``manifest.json`` with the dimension, length and provenance.
Values are serialized with 17 significant digits, so finite entries
round-trip bit-exactly.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np
import scipy.io

from .linalg import NotHermitianError
from .reduction import EigenPencil
from .sequence import PencilSequence

__all__ = [
    "FormatError",
    "write_pencil",
    "read_pencil",
    "save_sequence",
    "load_sequence",
]

_PRECISION = 17  # significant digits; enough for exact float64 round-trips


class FormatError(ValueError):
    """Pencil file is malformed or declares an unsupported format."""


def _matrix_path(directory, name, label):
    return Path(directory) / f"{name}_{label}.mtx"


def _write_matrix(path, m):
    scipy.io.mmwrite(str(path), m, field="complex", symmetry="hermitian", precision=_PRECISION)


def _read_matrix(path):
    path = Path(path)
    if not path.is_file():
        raise FormatError(f"missing matrix file {path}")
    try:
        rows, cols, _, fmt, fieldname, symmetry = scipy.io.mminfo(str(path))
    except Exception as exc:
        raise FormatError(f"malformed Matrix Market header in {path}: {exc}") from exc
    if fieldname != "complex" or symmetry != "hermitian":
        raise FormatError(
            f"{path}: expected a complex hermitian matrix, found field={fieldname!r} "
            f"symmetry={symmetry!r}"
        )
    if rows != cols:
        raise FormatError(f"{path}: matrix is not square ({rows}x{cols})")
    data = scipy.io.mmread(str(path))
    return np.asarray(data, dtype=np.complex128)


def write_pencil(pencil, directory):
    """Write one pencil as ``A_<label>.mtx`` / ``B_<label>.mtx``."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    _write_matrix(_matrix_path(directory, "A", pencil.label), pencil.a)
    _write_matrix(_matrix_path(directory, "B", pencil.label), pencil.b)


def read_pencil(directory, label=1):
    """Read the pencil with the given label from a sequence directory."""
    a = _read_matrix(_matrix_path(directory, "A", label))
    b = _read_matrix(_matrix_path(directory, "B", label))
    if a.shape != b.shape:
        raise FormatError(
            f"A_{label} and B_{label} differ in dimension: {a.shape} vs {b.shape}"
        )
    try:
        return EigenPencil(a=a, b=b, label=label)
    except (NotHermitianError, ValueError) as exc:
        raise FormatError(f"pencil {label} rejected: {exc}") from exc


def save_sequence(seq, directory):
    """Write all pencils of a sequence plus its manifest."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    for pencil in seq.pencils:
        write_pencil(pencil, directory)
    manifest = {
        "n": seq.n,
        "length": len(seq),
        "provenance": seq.provenance,
    }
    with open(directory / "manifest.json", "w") as fh:
        json.dump(manifest, fh, indent=2)


def load_sequence(directory):
    """Load a sequence directory written by :func:`save_sequence`."""
    directory = Path(directory)
    manifest_path = directory / "manifest.json"
    if not manifest_path.is_file():
        raise FormatError(f"missing manifest.json in {directory}")
    try:
        with open(manifest_path) as fh:
            manifest = json.load(fh)
        length = int(manifest["length"])
        n = int(manifest["n"])
    except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
        raise FormatError(f"malformed manifest in {directory}: {exc}") from exc
    pencils = [read_pencil(directory, label) for label in range(1, length + 1)]
    for p in pencils:
        if p.n != n:
            raise FormatError(f"pencil {p.label} has dimension {p.n}, manifest says {n}")
    return PencilSequence(
        pencils=pencils,
        provenance={"kind": "loaded", "path": str(directory)},
    )
