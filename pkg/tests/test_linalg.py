import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sympext import Definiteness, NotHermitian, definiteness_of, pinv, rank_kernel
from sympext.linalg import hermitian_eigen


def penrose_defect(m, p):
    return max(
        np.linalg.norm(m @ p @ m - m),
        np.linalg.norm(p @ m @ p - p),
        np.linalg.norm((m @ p).conj().T - m @ p),
        np.linalg.norm((p @ m).conj().T - p @ m),
    )


def test_pinv_identity():
    assert np.allclose(pinv(np.eye(3)), np.eye(3), atol=1e-12)


def test_pinv_zero_transposes_shape():
    p = pinv(np.zeros((2, 3)))
    assert p.shape == (3, 2)
    assert np.all(p == 0)


def test_pinv_singular_diagonal():
    p = pinv(np.diag([2.0, 0.0]))
    assert np.allclose(p, np.diag([0.5, 0.0]), atol=1e-12)
    assert penrose_defect(np.diag([2.0, 0.0]), p) < 1e-10


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 8), st.integers(1, 8), st.integers(0, 2**31 - 1))
def test_pinv_penrose_identities_random(rows, cols, seed):
    rng = np.random.default_rng(seed)
    m = rng.normal(size=(rows, cols)) + 1j * rng.normal(size=(rows, cols))
    assert penrose_defect(m, pinv(m)) < 1e-10 * max(1.0, np.linalg.norm(m) ** 2)


def test_rank_kernel_identity():
    rank, kern = rank_kernel(np.eye(2), 1e-9)
    assert rank == 2 and kern.shape == (2, 0)


def test_rank_kernel_rank_one():
    rank, kern = rank_kernel(np.ones((2, 2)), 1e-9)
    assert rank == 1
    expected = np.array([1.0, -1.0]) / np.sqrt(2)
    # direction defined up to phase
    overlap = abs(np.vdot(expected, kern[:, 0]))
    assert overlap == pytest.approx(1.0, abs=1e-12)


def test_rank_kernel_zero_matrix():
    rank, kern = rank_kernel(np.zeros((2, 2)), 1e-9)
    assert rank == 0
    assert np.allclose(kern.conj().T @ kern, np.eye(2), atol=1e-12)


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 6), st.integers(0, 2**31 - 1))
def test_rank_invariant_under_unitary(n, seed):
    rng = np.random.default_rng(seed)
    m = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    q, _ = np.linalg.qr(rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n)))
    r1, k1 = rank_kernel(m, 1e-9)
    r2, _ = rank_kernel(q @ m, 1e-9)
    assert r1 == r2
    if k1.shape[1]:
        assert np.linalg.norm(m @ k1) < 1e-9 * max(np.linalg.norm(m), 1.0)


def test_hermitian_eigen_diagonal():
    vals, vecs = hermitian_eigen(np.diag([3.0, 1.0]))
    assert np.allclose(vals, [1.0, 3.0])
    assert np.allclose(np.abs(vecs), [[0, 1], [1, 0]])


def test_hermitian_eigen_swap_matrix():
    vals, vecs = hermitian_eigen(np.array([[0.0, 1.0], [1.0, 0.0]]))
    assert np.allclose(vals, [-1.0, 1.0])
    assert np.allclose(np.abs(vecs), np.full((2, 2), 1 / np.sqrt(2)), atol=1e-12)


def test_hermitian_eigen_zero():
    vals, vecs = hermitian_eigen(np.zeros((2, 2)))
    assert np.allclose(vals, 0.0)
    assert np.allclose(vecs.conj().T @ vecs, np.eye(2), atol=1e-12)


def test_hermitian_eigen_rejects_nonhermitian():
    with pytest.raises(NotHermitian):
        hermitian_eigen(np.array([[0.0, 1.0], [0.0, 0.0]]))


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 8), st.integers(0, 2**31 - 1))
def test_hermitian_eigen_reconstruction(n, seed):
    rng = np.random.default_rng(seed)
    m = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    m = 0.5 * (m + m.conj().T)
    vals, vecs = hermitian_eigen(m)
    assert np.all(np.diff(vals) >= -1e-12)
    assert np.linalg.norm(vecs.conj().T @ vecs - np.eye(n)) < 1e-9
    assert np.linalg.norm(vecs @ np.diag(vals) @ vecs.conj().T - m) < 1e-9 * max(1.0, np.linalg.norm(m))


def test_definiteness_classification():
    assert definiteness_of(np.eye(2), 1e-9) is Definiteness.POSITIVE_DEFINITE
    assert definiteness_of(np.diag([1.0, 0.0]), 1e-9) is Definiteness.POSITIVE_SEMIDEFINITE
    assert definiteness_of(np.diag([1.0, -1.0]), 1e-9) is Definiteness.INDEFINITE
