import numpy as np
import pytest

import sympext as sx
from sympext.propagation import (
    RelationPair,
    canonical_forcing,
    pair_from_solution,
    read_sequence_csv,
    write_sequence_csv,
)
from conftest import random_symplectic_system


def constant_solution(lam, values_by_k):
    return sx.VectorSolution(lam, np.array(values_by_k, dtype=complex))


def test_step_backward_e1(e1):
    assert np.allclose(sx.step_backward(e1, [0, -1], 0, 0.0), [1, -1])
    assert np.allclose(sx.step_backward(e1, [0, 0], 3, 0.0), [0, 0])
    assert np.allclose(sx.step_backward(e1, [1, 0], 2, 0.0), [1, 0])


def test_step_forward_e1(e1):
    assert np.allclose(sx.step_forward(e1, [0, 1], 0, 0.0), [1, 1])
    assert np.allclose(sx.step_forward(e1, [1, 0], 0, -1.0), [2, 1])


def test_round_trip(e1, e2):
    rng = np.random.default_rng(3)
    for sysm in (e1, e2):
        for _ in range(20):
            z = rng.normal(size=2) + 1j * rng.normal(size=2)
            lam = complex(*rng.uniform(-1, 1, 2))
            f = rng.normal(size=2)
            k = int(rng.integers(0, 12))
            back = sx.step_backward(sysm, sx.step_forward(sysm, z, k, lam, f), k, lam, f)
            assert np.linalg.norm(back - z) < 1e-12 * (1 + np.linalg.norm(z))


def test_fundamental_matrix_e1(e1):
    phi = sx.fundamental_matrix(e1, 0.0, 3)
    for k in range(5):
        assert np.allclose(phi.values[k], [[1, k], [0, 1]])
    phi_neg = sx.fundamental_matrix(e1, -1.0, 1)
    assert np.allclose(phi_neg.values[1], [[2, 1], [1, 1]])


def test_fundamental_symplectic_conservation(e1):
    rng = np.random.default_rng(11)
    for _ in range(5):
        sysm = random_symplectic_system(rng, int(rng.integers(1, 4)))
        lam = complex(*rng.uniform(-0.05, 0.05, 2))
        K = 100
        phi = sx.fundamental_matrix(sysm, lam, K)
        phi_bar = sx.fundamental_matrix(sysm, np.conj(lam), K)
        j = sysm.j
        for k in (0, K // 2, K + 1):
            assert np.linalg.norm(phi_bar.values[k].conj().T @ j @ phi.values[k] - j) < 1e-9


def test_overflow_reports_numeric_failure(e1):
    with pytest.raises(sx.NumericFailure):
        sx.fundamental_matrix(e1, -1.0, 800)


def test_residual_profile_flags_solutions(e1):
    phi = sx.fundamental_matrix(e1, -0.5, 30)
    col = phi.column(0)
    assert sx.is_solution(e1, col)
    broken = col.values.copy()
    broken[10] += 1.0
    assert not sx.is_solution(e1, sx.VectorSolution(-0.5, broken))


def test_semi_inner_values(e1):
    const = constant_solution(0.0, [[1, 0]] * 12)
    assert sx.semi_inner(e1, const, const, 0, 9) == pytest.approx(10.0)
    zero_x = constant_solution(0.0, [[0, 5]] * 12)
    assert sx.semi_inner(e1, zero_x, zero_x, 0, 9) == pytest.approx(0.0)
    dominant = constant_solution(0.0, [[k, 1] for k in range(12)])
    assert sx.semi_inner(e1, const, dominant, 0, 2) == pytest.approx(3.0)


def test_semi_inner_conjugate_symmetry(e2):
    rng = np.random.default_rng(5)
    z = sx.VectorSolution(0.0, rng.normal(size=(8, 2)) + 1j * rng.normal(size=(8, 2)))
    w = sx.VectorSolution(0.0, rng.normal(size=(8, 2)) + 1j * rng.normal(size=(8, 2)))
    assert sx.semi_inner(e2, z, w, 0, 6) == pytest.approx(np.conj(sx.semi_inner(e2, w, z, 0, 6)))


def test_semi_inner_range_mismatch(e1):
    z = constant_solution(0.0, [[1, 0]] * 5)
    with pytest.raises(sx.RangeMismatch):
        sx.semi_inner(e1, z, z, 0, 10)


def test_wronskian_constancy_random(e1, e2):
    rng = np.random.default_rng(19)
    for sysm in (e1, e2):
        lam = float(rng.uniform(-1, 1))
        j = sysm.j
        z = sx.propagate_forward(sysm, rng.normal(size=2) + 1j * rng.normal(size=2), lam, 60)
        w = sx.propagate_forward(sysm, rng.normal(size=2) + 1j * rng.normal(size=2), lam, 60)
        wr = np.array([z.values[k].conj() @ j @ w.values[k] for k in range(62)])
        assert np.max(np.abs(wr - wr[0])) < 1e-8 * (1 + np.max(np.abs(z.values)) * np.max(np.abs(w.values)))


def test_lagrange_zero_pair(e1):
    zero = RelationPair(np.zeros((12, 2)), np.zeros((12, 2)))
    assert sx.lagrange_check(e1, zero, zero, 10) == pytest.approx(0.0)


def test_lagrange_constant_vs_dominant(e1):
    K = 10
    const = constant_solution(0.0, [[1, 0]] * (K + 2))
    dominant = constant_solution(0.0, [[k, 1] for k in range(K + 2)])
    p1 = pair_from_solution(e1, const)
    p2 = pair_from_solution(e1, dominant)
    assert sx.lagrange_check(e1, p1, p2, K) < 1e-12


def make_admissible(sysm, rng, K, scale=1.0):
    """Random admissible sequence: draw u and the terminal x, fill x backward."""
    n = sysm.n
    values = np.zeros((K + 2, 2 * n), dtype=complex)
    values[:, n:] = scale * (rng.normal(size=(K + 2, n)) + 1j * rng.normal(size=(K + 2, n)))
    values[K + 1, :n] = scale * (rng.normal(size=n) + 1j * rng.normal(size=n))
    for k in range(K, -1, -1):
        a, b = sysm.blocks(k)[:2]
        values[k, :n] = a @ values[k + 1, :n] + b @ values[k + 1, n:]
    return values


def test_lagrange_constructed_pairs(e1, e2):
    rng = np.random.default_rng(23)
    K = 40
    for sysm in (e1, e2):
        for _ in range(10):
            z = make_admissible(sysm, rng, K)
            w = make_admissible(sysm, rng, K)
            p1 = RelationPair(z, canonical_forcing(sysm, z))
            p2 = RelationPair(w, canonical_forcing(sysm, w))
            assert sx.lagrange_check(sysm, p1, p2, K) < 1e-9 * (K + 1)


def test_lagrange_rejects_non_members(e1):
    K = 10
    bad = RelationPair(np.ones((K + 2, 2)), np.zeros((K + 2, 2)))
    with pytest.raises(sx.NotASolution):
        sx.lagrange_check(e1, bad, bad, K)


def test_lagrange_residual_scales_with_noise(e1):
    rng = np.random.default_rng(29)
    K = 20
    z = make_admissible(e1, rng, K)
    w = make_admissible(e1, rng, K)
    residuals = []
    for eps in (1e-8, 1e-6):
        f = canonical_forcing(e1, z) + eps * rng.normal(size=z.shape)
        g = canonical_forcing(e1, w)
        tol = sx.DEFAULT.replace(res=1e-3)
        residuals.append(sx.lagrange_check(e1, RelationPair(z, f), RelationPair(w, g), K, tol))
    ratio = residuals[1] / residuals[0]
    assert 10 < ratio < 1e4  # roughly linear in the injected noise


def test_csv_round_trip(tmp_path, e1):
    phi = sx.fundamental_matrix(e1, 0.5j, 12)
    values = phi.values[:, :, 0]
    path = tmp_path / "seq.csv"
    write_sequence_csv(path, values)
    back = read_sequence_csv(path)
    assert back.shape == values.shape
    assert np.max(np.abs(back - values)) == 0.0  # 17 significant digits round-trip doubles


def test_csv_rejects_malformed(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("nonsense\n1,2\n")
    with pytest.raises(sx.FileError):
        read_sequence_csv(path)
