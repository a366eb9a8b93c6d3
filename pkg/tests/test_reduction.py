import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from csdecomp.bdb import HALF_PI, embed, validate_sign_pattern, materialize
from csdecomp.dense import orthogonality_defect, spectral_norm
from csdecomp.errors import InvalidInputError, RejectedInputError
from csdecomp.harness import gen_vanloan
from csdecomp.reduction import CsdProblem, bidiagonalize, weighted_colinear_average
from oracles import EPS, haar


def dims(rng, m_max=30):
    m = int(rng.integers(2, m_max + 1))
    p = int(rng.integers(1, m))
    q = int(rng.integers(0, min(p, m - p) + 1))
    return m, p, q


def check_result(x, p, q, res, rec_tol, ortho_tol):
    m = x.shape[0]
    assert spectral_norm(x - res.reconstruct(m, p)) <= rec_tol
    for f in (res.p1, res.p2, res.q1, res.q2):
        if f.size:
            assert orthogonality_defect(f) <= ortho_tol


def test_identity_input():
    for m, p, q in [(4, 2, 2), (7, 4, 2), (5, 3, 0), (6, 3, 3)]:
        res = bidiagonalize(CsdProblem(np.eye(m), p, q))
        np.testing.assert_array_equal(res.angles.theta, 0)
        np.testing.assert_array_equal(res.angles.phi, 0)
        for f in (res.p1, res.p2, res.q1, res.q2):
            # a signed permutation; the padding identities sit in other columns than in X
            a = np.abs(f)
            np.testing.assert_allclose(a.sum(axis=0), 1.0, atol=1e-15)
            np.testing.assert_allclose(a.sum(axis=1), 1.0, atol=1e-15)
            if m == 2 * q:
                np.testing.assert_allclose(a, np.eye(f.shape[0]), atol=1e-15)


def test_two_by_two_rotation():
    res = bidiagonalize(CsdProblem(np.array([[0.0, 1.0], [-1.0, 0.0]]), 1, 1))
    assert res.angles.theta[0] == pytest.approx(HALF_PI)
    for f in (res.p1, res.p2, res.q1, res.q2):
        np.testing.assert_allclose(f, [[1.0]])


def test_vanloan_reconstruction():
    prob = gen_vanloan()
    eps = prob.defect()
    res = bidiagonalize(prob)
    assert spectral_norm(prob.x - res.reconstruct(8, 4)) <= 10 * eps


def test_weighted_colinear_average_examples():
    np.testing.assert_allclose(weighted_colinear_average([1.0, 0.0], [1.0, 0.0]), [1.0, 0.0])
    np.testing.assert_allclose(weighted_colinear_average([0.0, 0.0], [0.0, 3.0]), [0.0, 1.0])
    np.testing.assert_allclose(weighted_colinear_average([2.0, 0.0], [-1.0, 0.0]), [1.0, 0.0])
    np.testing.assert_array_equal(weighted_colinear_average([0.0, 0.0], [0.0, 0.0]), [0.0, 0.0])
    with pytest.raises(InvalidInputError):
        weighted_colinear_average([1.0], [1.0, 2.0])


def test_problem_validation():
    with pytest.raises(InvalidInputError):
        CsdProblem(np.eye(3)[:, :2], 1, 1)
    with pytest.raises(InvalidInputError):
        CsdProblem(np.eye(4), 1, 2)
    with pytest.raises(InvalidInputError):
        CsdProblem(np.eye(4), 3, 2)
    x = np.eye(3)
    x[0, 0] = np.inf
    with pytest.raises(InvalidInputError):
        CsdProblem(x, 1, 1)


def test_rejects_far_from_unitary():
    with pytest.raises(RejectedInputError) as exc:
        bidiagonalize(CsdProblem(2 * np.eye(4), 2, 2))
    assert exc.value.defect == pytest.approx(3.0)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_reconstruction_random_shapes(seed):
    rng = np.random.default_rng(seed)
    m, p, q = dims(rng)
    x = haar(rng, m)
    res = bidiagonalize(CsdProblem(x, p, q))
    check_result(x, p, q, res, 100 * m * EPS, 64 * m * EPS)
    assert validate_sign_pattern(materialize(res.angles), q) if q else True


def test_complex_input():
    rng = np.random.default_rng(9)
    for m, p, q in [(6, 3, 3), (9, 5, 3), (7, 4, 2)]:
        z = rng.standard_normal((m, m)) + 1j * rng.standard_normal((m, m))
        x, _ = np.linalg.qr(z)
        res = bidiagonalize(CsdProblem(x, p, q))
        assert res.angles.theta.dtype == np.float64
        check_result(x, p, q, res, 100 * m * EPS, 64 * m * EPS)


def test_structural_progress():
    rng = np.random.default_rng(10)
    for m, p, q in [(10, 5, 4), (12, 6, 6), (9, 4, 3), (40, 18, 15)]:
        x = haar(rng, m)
        seen = []
        res = bidiagonalize(CsdProblem(x, p, q), observer=lambda i, y, src: seen.append((i, y)))
        final = embed(res.angles, m, p, q)
        assert [i for i, _ in seen] == list(range(q))
        for i, y in seen:
            rows = list(range(i + 1)) + list(range(p, p + i + 1))
            cols = list(range(i + 1)) + list(range(q, q + i))
            assert np.abs(y[rows] - final[rows]).max() <= 1e-12
            assert np.abs(y[:, cols] - final[:, cols]).max() <= 1e-12


def test_source_vectors_colinear():
    rng = np.random.default_rng(11)
    for m, p, q in [(10, 5, 4), (12, 6, 6), (40, 18, 15)]:
        x = haar(rng, m)
        worst = []

        def obs(i, y, src):
            for a, b in src.values():
                na, nb = np.linalg.norm(a), np.linalg.norm(b)
                worst.append(abs(abs(np.vdot(a, b)) - na * nb))

        bidiagonalize(CsdProblem(x, p, q), observer=obs)
        assert worst and max(worst) <= 1e-10
