import numpy as np
import pytest

from spectral_chain.linalg import cholesky, hermitian_eig
from spectral_chain.reduction import EigenSolution, back_transform, to_standard
from spectral_chain.sequence import (
    AngleReport,
    CorrelationSchedule,
    PencilSequence,
    angle_report,
    generate_sequence,
    match_eigenvectors,
)
from spectral_chain.harness import oracle_solve
from conftest import random_unitary


class TestCorrelationSchedule:
    def test_geometric_default(self):
        sched = CorrelationSchedule(length=5)
        assert len(sched.eps) == 4
        ratios = [b / a for a, b in zip(sched.eps, sched.eps[1:])]
        assert np.allclose(ratios, ratios[0])
        assert all(x >= y for x, y in zip(sched.eps, sched.eps[1:]))

    def test_explicit_eps_length_checked(self):
        with pytest.raises(ValueError):
            CorrelationSchedule(length=4, eps=[0.1, 0.1])

    def test_negative_eps_rejected(self):
        with pytest.raises(ValueError):
            CorrelationSchedule(length=2, eps=[-0.5])

    def test_zero_eps_allowed(self):
        CorrelationSchedule(length=3, eps=[0.0, 0.0])


class TestGenerateSequence:
    def test_zero_eps_repeats_the_problem(self):
        sched = CorrelationSchedule(length=4, eps=[0.0, 0.0, 0.0])
        seq = generate_sequence(20, sched, seed=0)
        first = seq.pencils[0]
        for p in seq.pencils[1:]:
            assert np.array_equal(p.a, first.a)
            assert np.array_equal(p.b, first.b)

    def test_single_problem_condition_target(self):
        sched = CorrelationSchedule(length=1, b_cond_target=1e6)
        seq = generate_sequence(64, sched, seed=2)
        singular_values, _ = hermitian_eig(seq.pencils[0].b, want_vectors=False)
        cond = singular_values[-1] / singular_values[0]
        assert 1e6 / 3 <= cond <= 3e6

    def test_labels_and_dimension(self):
        seq = generate_sequence(12, CorrelationSchedule(length=3), seed=1)
        assert [p.label for p in seq.pencils] == [1, 2, 3]
        assert seq.n == 12
        assert seq.provenance["kind"] == "generated"
        assert seq.provenance["seed"] == 1

    def test_overlaps_stay_positive_definite_under_large_kicks(self):
        # eps big enough that the first overlap update would break positive
        # definiteness; the generator halves it until the check passes
        sched = CorrelationSchedule(length=3, eps=[20.0, 20.0])
        seq = generate_sequence(30, sched, seed=3)
        for p in seq.pencils:
            cholesky(p.b)  # must not raise

    def test_angles_shrink_along_the_sequence(self):
        n, length = 60, 5
        seq = generate_sequence(n, CorrelationSchedule(length=length), seed=4)
        nev = 6
        sols = [oracle_solve(p, nev)[0] for p in seq.pencils]
        rep = angle_report(seq, sols, fraction=1.0)
        meds = [rep.median_angles[l] for l in range(1, length)]
        violations = sum(1 for a, b in zip(meds, meds[1:]) if b > a)
        assert violations <= 1
        assert meds[-1] < meds[0]

    def test_tiny_dimension_rejected(self):
        with pytest.raises(ValueError):
            generate_sequence(3, CorrelationSchedule(length=2), seed=0)


def identity_solution(vectors, form="standard"):
    return EigenSolution(values=np.arange(float(vectors.shape[1])), vectors=vectors, form=form)


class TestMatchEigenvectors:
    def test_identical_solutions(self, rng):
        v = random_unitary(rng, 16)[:, :5]
        sol = identity_solution(v)
        sigma, theta = match_eigenvectors(sol, None, sol, None)
        assert np.array_equal(sigma, np.arange(5))
        assert theta.max() <= 1e-7

    def test_recovers_column_swap(self, rng):
        v = random_unitary(rng, 12)[:, :4]
        swapped = v[:, [1, 0, 2, 3]]
        sigma, theta = match_eigenvectors(identity_solution(v), None,
                                          identity_solution(swapped), None)
        assert list(sigma) == [1, 0, 2, 3]
        assert theta.max() <= 1e-7

    def test_known_rotation_angle(self, rng):
        # rotate pairs of orthonormal columns inside their 2-planes by phi;
        # every matched pair must then report exactly phi
        phi = 1e-3
        v = random_unitary(rng, 20)[:, :4]
        rotated = v.copy()
        c, s = np.cos(phi), np.sin(phi)
        rotated[:, 0] = c * v[:, 0] + s * v[:, 1]
        rotated[:, 1] = -s * v[:, 0] + c * v[:, 1]
        rotated[:, 2] = c * v[:, 2] + s * v[:, 3]
        rotated[:, 3] = -s * v[:, 2] + c * v[:, 3]
        sigma, theta = match_eigenvectors(identity_solution(v), None,
                                          identity_solution(rotated), None)
        assert np.array_equal(sigma, np.arange(4))
        assert np.abs(theta - phi).max() <= 1e-6

    def test_identity_overlap_reduces_to_plain_inner_products(self, rng):
        # generalized-form solutions with L = I must agree with treating the
        # same vectors as standard-form ones
        v1 = random_unitary(rng, 10)[:, :3]
        v2 = random_unitary(rng, 10)[:, :3]
        eye = np.eye(10, dtype=complex)
        sigma_gen, theta_gen = match_eigenvectors(
            identity_solution(v1, "generalized"), eye,
            identity_solution(v2, "generalized"), eye,
        )
        sigma_std, theta_std = match_eigenvectors(
            identity_solution(v1), None, identity_solution(v2), None
        )
        assert np.array_equal(sigma_gen, sigma_std)
        assert np.abs(theta_gen - theta_std).max() <= 1e-14

    def test_permutation_equivariance(self, rng):
        v1 = random_unitary(rng, 14)[:, :5]
        v2 = random_unitary(rng, 14)[:, :5]
        perm = np.array([2, 0, 4, 1, 3])
        sigma_base, _ = match_eigenvectors(identity_solution(v1), None,
                                           identity_solution(v2), None)
        sigma_perm, _ = match_eigenvectors(identity_solution(v1), None,
                                           identity_solution(v2[:, perm]), None)
        # column j of v2 appears at position argsort(perm)[j] after permuting
        inverse = np.argsort(perm)
        assert np.array_equal(sigma_perm, inverse[sigma_base])

    def test_role_swap_inverts_the_matching(self, rng):
        v1 = random_unitary(rng, 18)[:, :6]
        v2 = random_unitary(rng, 18)[:, :6]
        sigma_fwd, theta_fwd = match_eigenvectors(identity_solution(v1), None,
                                                  identity_solution(v2), None)
        sigma_bwd, theta_bwd = match_eigenvectors(identity_solution(v2), None,
                                                  identity_solution(v1), None)
        for i, j in enumerate(sigma_fwd):
            assert sigma_bwd[j] == i
        assert np.abs(np.sort(theta_fwd) - np.sort(theta_bwd)).max() <= 1e-10

    def test_generalized_form_matches_eq_of_motion(self, rng):
        # cross-Gram built from back-transformed vectors must coincide with
        # the standard-form inner products of the y blocks
        from conftest import random_hermitian, random_spd

        n = 16
        a1 = random_hermitian(rng, n)
        b1 = random_spd(rng, n, 50.0)
        from spectral_chain.reduction import EigenPencil

        sp1 = to_standard(EigenPencil(a=a1, b=b1))
        values, vectors = np.linalg.eigh(sp1.h)
        std = EigenSolution(values=values[:4], vectors=vectors[:, :4], form="standard")
        gen = back_transform(sp1.cholesky_factor, std)
        sigma_std, theta_std = match_eigenvectors(std, None, std, None)
        sigma_gen, theta_gen = match_eigenvectors(gen, sp1.cholesky_factor,
                                                  gen, sp1.cholesky_factor)
        assert np.array_equal(sigma_std, sigma_gen)
        assert theta_gen.max() <= 1e-7


class TestAngleReport:
    def test_zero_eps_means_zero_medians(self):
        seq = generate_sequence(24, CorrelationSchedule(length=3, eps=[0.0, 0.0]), seed=5)
        sols = [oracle_solve(p, 4)[0] for p in seq.pencils]
        rep = angle_report(seq, sols, fraction=1.0)
        assert all(m <= 1e-7 for m in rep.median_angles.values())

    def test_fraction_one_tracks_every_pair(self):
        seq = generate_sequence(20, CorrelationSchedule(length=3), seed=6)
        nev = 5
        sols = [oracle_solve(p, nev)[0] for p in seq.pencils]
        rep = angle_report(seq, sols, fraction=1.0)
        assert all(len(v) == nev for v in rep.angles.values())
        rep_half = angle_report(seq, sols, fraction=0.5)
        assert all(len(v) == 3 for v in rep_half.angles.values())  # ceil(0.5*5)

    def test_angles_live_in_the_first_quadrant(self):
        seq = generate_sequence(20, CorrelationSchedule(length=4), seed=7)
        sols = [oracle_solve(p, 5)[0] for p in seq.pencils]
        rep = angle_report(seq, sols)
        for theta in rep.angles.values():
            assert (theta >= 0).all() and (theta <= np.pi / 2).all()
        for sigma in rep.matching.values():
            assert sorted(sigma) == list(range(5))

    def test_missing_solution_rejected(self):
        seq = generate_sequence(20, CorrelationSchedule(length=3), seed=8)
        sols = [oracle_solve(p, 4)[0] for p in seq.pencils]
        sols[1] = None
        with pytest.raises(ValueError):
            angle_report(seq, sols)
        with pytest.raises(ValueError):
            angle_report(seq, sols[:2])
