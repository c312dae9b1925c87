import numpy as np
import pytest

import sympext as sx
from conftest import random_symplectic_system


def test_e1_is_valid(e1):
    s = e1.s(0)
    j = e1.j
    assert np.allclose(s.conj().T @ j @ s, j, atol=1e-12)


def test_identity_system_valid(identity_system):
    assert identity_system.n == 1


def test_nonsymplectic_rejected():
    with pytest.raises(sx.NotSymplectic) as err:
        sx.build_system(sx.ConstantCoefficients([[1]], [[0]], [[0]], [[2]], [[1]]), 4)
    assert err.value.k == 0


def test_zero_weight_rejected():
    with pytest.raises(sx.WeightNotPositive):
        sx.build_system(sx.ConstantCoefficients([[1]], [[-1]], [[0]], [[1]], [[0]]), 4)


def test_dimension_mismatch_rejected():
    with pytest.raises(sx.DimensionMismatch):
        sx.ConstantCoefficients([[1]], [[-1]], [[0]], [[1]], [[1, 0], [0, 1]])


def test_psi_and_v_blocks(e1, identity_system):
    assert np.allclose(sx.psi_of(e1, 0), [[1, 0], [0, 0]])
    assert np.allclose(sx.v_of(e1, 0), [[0, 0], [1, -1]])
    assert np.allclose(sx.v_of(identity_system, 0), [[0, 0], [1, 0]])


def test_s_lambda_values(e1):
    assert np.allclose(sx.s_lambda(e1, 0, 0.0), [[1, -1], [0, 1]])
    for lam in (0.5, -2.0, 3.0):
        assert np.allclose(sx.s_lambda(e1, 0, lam), [[1, -1], [lam, 1 - lam]])


def test_pencil_identity_random_probes(e1, e2):
    rng = np.random.default_rng(7)
    for sysm in (e1, e2):
        j = sysm.j
        for _ in range(12):
            lam = complex(*rng.uniform(-2, 2, size=2))
            k = int(rng.integers(0, 30))
            sl = sysm.s_lambda(k, lam)
            sl_bar = sysm.s_lambda(k, np.conj(lam))
            assert np.linalg.norm(sl_bar.conj().T @ j @ sl - j) < 1e-10 * (1 + np.linalg.norm(sl) ** 2)
            inv = sysm.s_lambda_inv(k, lam)
            assert np.allclose(inv @ sl, np.eye(2 * sysm.n), atol=1e-10)


def test_weight_scaled_provider(e2):
    assert np.allclose(e2.weight(0), [[1.0]])
    assert np.allclose(e2.weight(3), [[0.25**3]])


def test_explicit_provider_extends_by_final_element():
    provider = sx.ExplicitCoefficients(
        [[[1]], [[1]]], [[[-1]], [[-1]]], [[[0]], [[0]]], [[[1]], [[1]]], [[[1]], [[2]]]
    )
    sysm = sx.build_system(provider, 6)
    assert np.allclose(sysm.weight(1), [[2.0]])
    assert np.allclose(sysm.weight(5), [[2.0]])


def test_periodic_provider_cycles():
    provider = sx.PeriodicCoefficients(
        [[[1]], [[1]]], [[[-1]], [[-1]]], [[[0]], [[0]]], [[[1]], [[1]]], [[[1]], [[2]]]
    )
    sysm = sx.build_system(provider, 6)
    assert np.allclose(sysm.weight(4), [[1.0]])
    assert np.allclose(sysm.weight(5), [[2.0]])


def test_atkinson_e1_window(e1):
    holds, gram = sx.check_atkinson(e1, 0.0, (0, 1))
    assert holds
    assert np.allclose(gram, [[2, 1], [1, 1]], atol=1e-12)


def test_atkinson_identity_system_fails(identity_system):
    for b in (1, 5, 20):
        holds, _ = sx.check_atkinson(identity_system, 0.0, (0, b))
        assert not holds


def test_atkinson_e1_negative_lambda(e1):
    holds, _ = sx.check_atkinson(e1, -1.0, (0, 1))
    assert holds


def test_atkinson_monotone_in_window(e1, e2):
    for sysm in (e1, e2):
        holds_small, _ = sx.check_atkinson(sysm, 0.0, (0, 1))
        assert holds_small
        for b in (2, 4, 9):
            holds, _ = sx.check_atkinson(sysm, 0.0, (0, b))
            assert holds


def test_atkinson_lambda_independence_probe(e1, e2, identity_system):
    probes = (0.0, 1.0, -1.0, 1j, 0.5 - 0.25j)
    for sysm, expected in ((e1, True), (e2, True), (identity_system, False)):
        for lam in probes:
            holds, _ = sx.check_atkinson(sysm, lam, (0, 2))
            assert holds == expected


def test_random_systems_validate():
    rng = np.random.default_rng(0)
    for _ in range(10):
        n = int(rng.integers(1, 5))
        sysm = random_symplectic_system(rng, n)
        j = sysm.j
        s = sysm.s(0)
        assert np.linalg.norm(s.conj().T @ j @ s - j) < 1e-10 * (1 + np.linalg.norm(s) ** 2)
