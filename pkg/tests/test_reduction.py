import numpy as np
import pytest
import scipy.linalg

from spectral_chain.linalg import NotPositiveDefiniteError, cholesky
from spectral_chain.reduction import (
    EigenPencil,
    EigenSolution,
    StandardProblem,
    back_transform,
    forward_transform,
    residual,
    to_standard,
)
from conftest import random_hermitian, random_spd


def make_pencil(rng, n, cond=100.0, label=1):
    return EigenPencil(a=random_hermitian(rng, n), b=random_spd(rng, n, cond), label=label)


class TestEigenPencil:
    def test_dimension_mismatch(self, rng):
        with pytest.raises(ValueError):
            EigenPencil(a=random_hermitian(rng, 4), b=random_spd(rng, 5))

    def test_b_must_be_positive_definite_for_reduction(self, rng):
        indefinite = random_hermitian(rng, 6)  # indefinite almost surely
        pencil = EigenPencil(a=random_hermitian(rng, 6), b=indefinite + 0 * 1j + np.eye(6) * 0)
        with pytest.raises(NotPositiveDefiniteError):
            to_standard(pencil)


class TestToStandard:
    def test_identity_overlap_is_noop(self, rng):
        a = random_hermitian(rng, 7)
        sp = to_standard(EigenPencil(a=a, b=np.eye(7)))
        assert np.array_equal(sp.h, a.astype(complex))
        assert np.allclose(sp.cholesky_factor, np.eye(7))

    def test_diagonal_hand_case(self):
        # A=diag(1,2), B=diag(4,1): L=diag(2,1), H=diag(1/4, 2)
        sp = to_standard(EigenPencil(a=np.diag([1.0, 2.0]), b=np.diag([4.0, 1.0])))
        assert np.allclose(sp.cholesky_factor, np.diag([2.0, 1.0]))
        assert np.allclose(sp.h, np.diag([0.25, 2.0]))

    def test_spectrum_preserved(self, rng):
        pencil = make_pencil(rng, 20)
        sp = to_standard(pencil)
        h_vals = np.linalg.eigvalsh(sp.h)
        # independent oracle 1: LAPACK's generalized driver
        gen_vals = scipy.linalg.eigh(pencil.a, pencil.b, eigvals_only=True)
        scale = np.abs(gen_vals).max()
        assert np.abs(h_vals - gen_vals).max() <= 1e-9 * scale
        # independent oracle 2: A - lambda*B is singular at each eigenvalue
        for lam in h_vals[:5]:
            shifted = pencil.a - lam * pencil.b
            s = np.linalg.svd(shifted, compute_uv=False)
            assert s[-1] <= 1e-9 * s[0]

    @pytest.mark.parametrize("n", [10, 60, 200])
    def test_spectrum_preserved_sizes(self, rng, n):
        pencil = make_pencil(rng, n, cond=1e4)
        sp = to_standard(pencil)
        h_vals = np.linalg.eigvalsh(sp.h)
        gen_vals = scipy.linalg.eigh(pencil.a, pencil.b, eigvals_only=True)
        assert np.abs(h_vals - gen_vals).max() <= 1e-9 * np.abs(gen_vals).max()

    def test_h_exactly_hermitian(self, rng):
        sp = to_standard(make_pencil(rng, 30, cond=1e6))
        assert np.array_equal(sp.h, sp.h.conj().T)


class TestBackTransform:
    def test_identity_factor_keeps_vectors(self, rng):
        vec = rng.standard_normal((5, 2)) + 1j * rng.standard_normal((5, 2))
        sol = EigenSolution(values=[1.0, 2.0], vectors=vec, form="standard")
        out = back_transform(np.eye(5), sol)
        assert out.form == "generalized"
        assert np.allclose(out.vectors, vec)
        assert np.array_equal(out.values, sol.values)

    def test_diagonal_hand_case(self):
        # continuing the diag(1,2)/diag(4,1) pencil: y=(1,0) for lambda=1/4
        # maps to x=(1/2, 0), which is B-normalized
        b = np.diag([4.0, 1.0])
        sol = EigenSolution(values=[0.25], vectors=np.array([[1.0], [0.0]]), form="standard")
        out = back_transform(np.diag([2.0, 1.0]), sol)
        assert np.allclose(out.vectors.ravel(), [0.5, 0.0])
        x = out.vectors[:, 0]
        assert abs(x.conj() @ b @ x - 1.0) <= 1e-14

    def test_pencil_residuals_and_b_orthonormality(self, rng):
        pencil = make_pencil(rng, 25, cond=1e5)
        sp = to_standard(pencil)
        values, vectors = np.linalg.eigh(sp.h)
        sol = EigenSolution(values=values[:8], vectors=vectors[:, :8], form="standard")
        out = back_transform(sp.cholesky_factor, sol)
        assert out.orthonormality_defect(pencil.b) <= 1e-8
        norm_a = np.linalg.norm(pencil.a, 2)
        norm_b = np.linalg.norm(pencil.b, 2)
        for lam, x in zip(out.values, out.vectors.T):
            r = np.linalg.norm(pencil.a @ x - lam * pencil.b @ x)
            assert r <= 1e-8 * (norm_a + abs(lam) * norm_b)

    def test_round_trip(self, rng):
        pencil = make_pencil(rng, 15)
        l = cholesky(pencil.b)
        x = rng.standard_normal((15, 4)) + 1j * rng.standard_normal((15, 4))
        sol = EigenSolution(values=np.arange(4.0), vectors=forward_transform(l, x), form="standard")
        assert np.abs(back_transform(l, sol).vectors - x).max() <= 1e-12

    def test_requires_standard_form(self, rng):
        sol = EigenSolution(values=[1.0], vectors=np.ones((3, 1)), form="generalized")
        with pytest.raises(ValueError):
            back_transform(np.eye(3), sol)


class TestResidual:
    def test_exact_pair_is_zero(self):
        sp = StandardProblem(h=np.diag([1.0, 2.0, 3.0]).astype(complex),
                             cholesky_factor=np.eye(3, dtype=complex))
        assert residual(sp, 2.0, [0.0, 1.0, 0.0]) <= 1e-15

    def test_unit_off_eigenpair(self):
        sp = StandardProblem(h=np.diag([1.0, 2.0]).astype(complex),
                             cholesky_factor=np.eye(2, dtype=complex))
        assert residual(sp, 1.0, [0.0, 1.0]) == pytest.approx(1.0)

    def test_matches_naive_recomputation(self, rng):
        pencil = make_pencil(rng, 9)
        v = rng.standard_normal(9) + 1j * rng.standard_normal(9)
        lam = 0.7
        got = residual(pencil, lam, v)
        # plain loops, no matrix ops
        r = np.zeros(9, dtype=complex)
        for i in range(9):
            acc = 0.0 + 0.0j
            for j in range(9):
                acc += pencil.a[i, j] * v[j] - lam * pencil.b[i, j] * v[j]
            r[i] = acc
        want = np.sqrt(sum(abs(z) ** 2 for z in r)) / np.sqrt(sum(abs(z) ** 2 for z in v))
        assert got == pytest.approx(want, rel=1e-12)

    def test_absolute_equals_relative_on_unit_vectors(self, rng):
        # the relative formula divides by |v|, so unit vectors make both agree
        pencil = make_pencil(rng, 6)
        v = rng.standard_normal(6) + 1j * rng.standard_normal(6)
        v /= np.linalg.norm(v)
        absolute = np.linalg.norm(pencil.a @ v - 0.3 * pencil.b @ v)
        assert residual(pencil, 0.3, v) == pytest.approx(absolute, rel=1e-13)

    def test_zero_vector_rejected(self):
        sp = StandardProblem(h=np.eye(2, dtype=complex), cholesky_factor=np.eye(2, dtype=complex))
        with pytest.raises(ValueError):
            residual(sp, 1.0, np.zeros(2))
