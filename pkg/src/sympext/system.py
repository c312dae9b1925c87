"""Coefficient providers and validated symplectic systems.

A system is the pair (S, W): 2n x 2n symplectic steps S_k with block
decomposition [[A,B],[C,D]] and Hermitian positive weights W_k.  Derived
objects: Psi_k = [[W,0],[0,0]], V_k = -J Psi_k S_k and the spectral pencil
S_k(lambda) = S_k + lambda V_k.
"""

from __future__ import annotations

import dataclasses

import numpy as np

from .errors import DimensionMismatch, NotSymplectic, RangeMismatch, WeightNotPositive
from .linalg import Definiteness, as_matrix, definiteness_of, hermitian_defect
from .tolerances import DEFAULT, Tolerances

# deterministic spectral probes used when validating S(lambda)
_LAMBDA_PROBES = (0.0, 1.0, -1.0, 1j, 0.5 - 0.25j)


def j_matrix(n: int) -> np.ndarray:
    """The 2n x 2n skew matrix [[0, I], [-I, 0]]."""
    j = np.zeros((2 * n, 2 * n), dtype=complex)
    j[:n, n:] = np.eye(n)
    j[n:, :n] = -np.eye(n)
    return j


class CoefficientProvider:
    """Supplies (A_k, B_k, C_k, D_k, W_k) for every k >= 0."""

    n: int

    def blocks(self, k: int) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
        raise NotImplementedError

    def period_hint(self) -> int:
        """Number of steps that covers one full coefficient pattern."""
        return 1

    def cache_key(self, k: int):
        """Steps with equal keys share identical coefficient blocks."""
        return k


def _check_square(name: str, m: np.ndarray, n: int) -> np.ndarray:
    m = as_matrix(m)
    if m.shape != (n, n):
        raise DimensionMismatch(f"block {name} must be {n}x{n}, got {m.shape}")
    return m


class ConstantCoefficients(CoefficientProvider):
    def __init__(self, a, b, c, d, w):
        a = as_matrix(a)
        self.n = a.shape[0]
        self.a = _check_square("A", a, self.n)
        self.b = _check_square("B", b, self.n)
        self.c = _check_square("C", c, self.n)
        self.d = _check_square("D", d, self.n)
        self.w = _check_square("W", w, self.n)

    def blocks(self, k):
        return self.a, self.b, self.c, self.d, self.w

    def cache_key(self, k):
        return 0


class PeriodicCoefficients(CoefficientProvider):
    """Cycles through the given block lists."""

    def __init__(self, a_list, b_list, c_list, d_list, w_list):
        lists = [list(map(as_matrix, blocks)) for blocks in (a_list, b_list, c_list, d_list, w_list)]
        lengths = {len(lst) for lst in lists}
        if len(lengths) != 1 or 0 in lengths:
            raise DimensionMismatch("periodic block lists must share one nonzero length")
        self.period = lengths.pop()
        self.n = lists[0][0].shape[0]
        names = "ABCDW"
        for name, lst in zip(names, lists):
            for m in lst:
                _check_square(name, m, self.n)
        self.a_list, self.b_list, self.c_list, self.d_list, self.w_list = lists

    def blocks(self, k):
        i = k % self.period
        return self.a_list[i], self.b_list[i], self.c_list[i], self.d_list[i], self.w_list[i]

    def period_hint(self):
        return self.period

    def cache_key(self, k):
        return k % self.period


class ExplicitCoefficients(PeriodicCoefficients):
    """Stored block lists; indices beyond the stored range reuse the final element."""

    def blocks(self, k):
        i = min(k, self.period - 1)
        return self.a_list[i], self.b_list[i], self.c_list[i], self.d_list[i], self.w_list[i]

    def period_hint(self):
        return self.period

    def cache_key(self, k):
        return min(k, self.period - 1)


class WeightScaledCoefficients(ConstantCoefficients):
    """Constant blocks with a geometrically decaying or growing weight W_k = W * gamma^k."""

    def __init__(self, a, b, c, d, w, gamma: float):
        super().__init__(a, b, c, d, w)
        if not (gamma > 0):
            raise DimensionMismatch("gamma must be positive")
        self.gamma = float(gamma)

    def blocks(self, k):
        return self.a, self.b, self.c, self.d, self.w * self.gamma**k

    def period_hint(self):
        # weight varies every step; any probe range sees fresh values
        return 1

    def cache_key(self, k):
        return k  # every step has its own weight


@dataclasses.dataclass(frozen=True)
class SymplecticSystem:
    """Validated system; immutable, all queries are pure.

    Derived per-step matrices are memoized on the provider's cache key, so
    constant and periodic systems pay the assembly cost only once per pattern.
    """

    n: int
    provider: CoefficientProvider
    probe_range: tuple[int, int]
    tol: Tolerances = DEFAULT
    _cache: dict = dataclasses.field(default_factory=dict, compare=False, repr=False)

    @property
    def j(self) -> np.ndarray:
        hit = self._cache.get("j")
        if hit is None:
            hit = j_matrix(self.n)
            self._cache["j"] = hit
        return hit

    def blocks(self, k: int):
        return self.provider.blocks(k)

    def _memo(self, kind: str, k: int, build):
        key = (kind, self.provider.cache_key(k))
        hit = self._cache.get(key)
        if hit is None:
            hit = build()
            self._cache[key] = hit
        return hit

    def s(self, k: int) -> np.ndarray:
        def build():
            a, b, c, d, _ = self.provider.blocks(k)
            return np.block([[a, b], [c, d]])

        return self._memo("s", k, build)

    def weight(self, k: int) -> np.ndarray:
        return self.provider.blocks(k)[4]

    def psi(self, k: int) -> np.ndarray:
        def build():
            psi = np.zeros((2 * self.n, 2 * self.n), dtype=complex)
            psi[: self.n, : self.n] = self.weight(k)
            return psi

        return self._memo("psi", k, build)

    def v(self, k: int) -> np.ndarray:
        return self._memo("v", k, lambda: -self.j @ self.psi(k) @ self.s(k))

    def s_lambda(self, k: int, lam: complex) -> np.ndarray:
        lam = complex(lam)
        return self._memo(("sl", lam), k, lambda: self.s(k) + lam * self.v(k))

    def s_lambda_inv(self, k: int, lam: complex) -> np.ndarray:
        # exact inverse -J S(conj(lam))^* J from the symplectic-type identity
        lam = complex(lam)

        def build():
            j = self.j
            return -j @ self.s_lambda(k, np.conj(lam)).conj().T @ j

        return self._memo(("sli", lam), k, build)


def psi_of(sys: SymplecticSystem, k: int) -> np.ndarray:
    return sys.psi(k)


def v_of(sys: SymplecticSystem, k: int) -> np.ndarray:
    return sys.v(k)


def s_lambda(sys: SymplecticSystem, k: int, lam: complex) -> np.ndarray:
    return sys.s_lambda(k, lam)


def _validate_step(sys: SymplecticSystem, k: int) -> None:
    tol = sys.tol
    n = sys.n
    j = sys.j
    a, b, c, d, w = sys.blocks(k)
    for name, m in (("A", a), ("B", b), ("C", c), ("D", d), ("W", w)):
        _check_square(name, m, n)

    s = sys.s(k)
    scale = 1.0 + np.linalg.norm(s) ** 2
    defect = np.linalg.norm(s.conj().T @ j @ s - j)
    if defect > tol.sym * scale:
        raise NotSymplectic(k, float(defect))

    wnorm = np.linalg.norm(w)
    if hermitian_defect(w) > tol.sym * max(wnorm, 1e-300):
        raise WeightNotPositive(k, " (not Hermitian)")
    wmin = float(np.min(np.linalg.eigvalsh(0.5 * (w + w.conj().T))))
    if not wmin > tol.sym * wnorm:
        raise WeightNotPositive(k, f" (min eigenvalue {wmin:.3e})")

    psi = sys.psi(k)
    v = sys.v(k)
    checks = {
        "Psi J Psi": np.linalg.norm(psi @ j @ psi),
        "Psi* J Psi": np.linalg.norm(psi.conj().T @ j @ psi),
        "V* J V": np.linalg.norm(v.conj().T @ j @ v),
        "V* J S Hermitian": hermitian_defect(v.conj().T @ j @ s),
        "Psi = J S J V* J": np.linalg.norm(psi - j @ s @ j @ v.conj().T @ j),
    }
    step_scale = 1.0 + np.linalg.norm(s) ** 2 + wnorm**2
    for name, value in checks.items():
        if value > tol.sym * step_scale:
            raise NotSymplectic(k, float(value))

    for lam in _LAMBDA_PROBES:
        sl = sys.s_lambda(k, lam)
        sl_bar = sys.s_lambda(k, np.conj(lam))
        pencil_defect = np.linalg.norm(sl_bar.conj().T @ j @ sl - j)
        if pencil_defect > tol.sym * (1.0 + np.linalg.norm(sl) ** 2):
            raise NotSymplectic(k, float(pencil_defect))


def build_system(
    provider: CoefficientProvider,
    probe_range: tuple[int, int] | int = 16,
    tol: Tolerances = DEFAULT,
) -> SymplecticSystem:
    """Validate the provider on a probe range and wrap it.

    Validation is sampled: the probe covers [0, K] extended to at least one
    full period of the provider.  Raises NotSymplectic / WeightNotPositive /
    DimensionMismatch with the offending step index.
    """
    if isinstance(probe_range, int):
        probe_range = (0, probe_range)
    lo, hi = probe_range
    if lo < 0 or hi < max(lo, 1):
        raise DimensionMismatch(f"invalid probe range {probe_range}")
    hi = max(hi, lo + provider.period_hint())
    sys = SymplecticSystem(n=provider.n, provider=provider, probe_range=(lo, hi), tol=tol)
    for k in range(lo, hi + 1):
        _validate_step(sys, k)
    return sys


def check_atkinson(
    sys: SymplecticSystem,
    lam: complex,
    window: tuple[int, int],
    tol: Tolerances | None = None,
) -> tuple[bool, np.ndarray]:
    """Strong Atkinson (definiteness) check on a finite window.

    Builds the Gram matrix sum_{k=a}^{b} Phi_k(lam)^* Psi_k Phi_k(lam) for the
    fundamental matrix normalized at k=0 and tests positive definiteness;
    positivity certifies that no nontrivial solution has zero Psi-energy on
    [a, b].
    """
    tol = tol or sys.tol
    a, b = window
    if not (0 <= a <= b):
        raise RangeMismatch(f"invalid Atkinson window {window}")
    phi = np.eye(2 * sys.n, dtype=complex)
    gram = np.zeros((2 * sys.n, 2 * sys.n), dtype=complex)
    for k in range(0, b + 1):
        if k >= a:
            x = phi[: sys.n, :]
            gram += x.conj().T @ sys.weight(k) @ x
        phi = sys.s_lambda_inv(k, lam) @ phi
    gram = 0.5 * (gram + gram.conj().T)
    holds = definiteness_of(gram, tol.psd, tol) is Definiteness.POSITIVE_DEFINITE
    return holds, gram
