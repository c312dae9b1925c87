import numpy as np
import pytest

import sympext as sx


@pytest.fixture(scope="session")
def e1():
    """Scalar free-lattice system: A=1, B=-1, C=0, D=1, W=1."""
    return sx.build_system(sx.ConstantCoefficients([[1]], [[-1]], [[0]], [[1]], [[1]]), 16)


@pytest.fixture(scope="session")
def e2():
    """E1 blocks with geometrically decaying weight W_k = (1/4)^k."""
    return sx.build_system(sx.WeightScaledCoefficients([[1]], [[-1]], [[0]], [[1]], [[1]], 0.25), 16)


@pytest.fixture(scope="session")
def identity_system():
    """S_k = I with unit weight; symplectic but not Atkinson-definite."""
    return sx.build_system(sx.ConstantCoefficients([[1]], [[0]], [[0]], [[1]], [[1]]), 16)


def random_hermitian(rng, n, scale=1.0):
    m = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    return scale * 0.5 * (m + m.conj().T)


def random_symplectic_system(rng, n, growth=0.05):
    """Random validated system via the Cayley transform of a J-skew generator."""
    h = random_hermitian(rng, 2 * n)
    h *= growth / max(np.linalg.norm(h), 1e-12)
    j = sx.j_matrix(n)
    x = j @ h
    eye = np.eye(2 * n)
    s = np.linalg.solve(eye - 0.5 * x, eye + 0.5 * x)
    w = random_hermitian(rng, n, 0.25)
    w = w @ w.conj().T + np.eye(n)
    a, b = s[:n, :n], s[:n, n:]
    c, d = s[n:, :n], s[n:, n:]
    return sx.build_system(sx.ConstantCoefficients(a, b, c, d, w), 4)
