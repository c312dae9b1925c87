"""Conjoined bases, disconjugacy, controllability and the quadratic functional."""

from __future__ import annotations

import dataclasses

import numpy as np

from .errors import DimensionMismatch, NotAdmissible, RangeMismatch
from .linalg import pinv, rank_kernel
from .propagation import MatrixSolution, VectorSolution, propagate_backward, semi_inner
from .system import SymplecticSystem
from .tolerances import DEFAULT, Tolerances


def is_conjoined_basis(sys: SymplecticSystem, z: MatrixSolution, tol: Tolerances = DEFAULT) -> bool:
    """rank Z_0 = n together with Z_0^* J Z_0 = 0.

    By Wronskian constancy at real lambda the certification point k=0 settles
    every k.
    """
    if z.ncols != sys.n:
        raise DimensionMismatch(f"conjoined basis needs n={sys.n} columns, got {z.ncols}")
    z0 = z.values[0]
    rank, _ = rank_kernel(z0, tol.rank)
    if rank != sys.n:
        return False
    skew = z0.conj().T @ sys.j @ z0
    return bool(np.linalg.norm(skew) <= tol.res * (1.0 + np.linalg.norm(z0) ** 2))


def is_normalized_pair(sys: SymplecticSystem, z: MatrixSolution, zt: MatrixSolution, tol: Tolerances = DEFAULT) -> bool:
    """Checks Z_0^* J Zt_0 = I."""
    w = z.values[0].conj().T @ sys.j @ zt.values[0]
    return bool(np.linalg.norm(w - np.eye(sys.n)) <= tol.res * (1.0 + np.linalg.norm(w)))


def principal_solution(sys: SymplecticSystem, nu: float, N: int) -> MatrixSolution:
    """Solution determined by Z_{N+1} = (0; -I), propagated backward to 0."""
    terminal = np.zeros((2 * sys.n, sys.n), dtype=complex)
    terminal[sys.n :, :] = -np.eye(sys.n)
    return propagate_backward(sys, terminal, nu, N)


@dataclasses.dataclass
class WindowReport:
    """Per-step disconjugacy diagnostics for the principal solution at N+1."""

    k: int
    kernel_ok: bool
    psd_ok: bool
    min_eig: float
    hermitian_defect: float

    @property
    def ok(self) -> bool:
        return self.kernel_ok and self.psd_ok


def _window_reports(sys: SymplecticSystem, z: MatrixSolution, M: int, N: int, tol: Tolerances) -> list[WindowReport]:
    reports = []
    for k in range(M, N + 1):
        xk = z.X[k]
        xk1 = z.X[k + 1]
        b = sys.blocks(k)[1]
        _, kern = rank_kernel(xk, tol.rank)
        if kern.shape[1] == 0:
            kernel_ok = True
        else:
            mapped = xk1 @ kern
            kernel_ok = bool(np.linalg.norm(mapped, axis=0).max() <= tol.rank * max(np.linalg.norm(xk1), 1.0))
        p = -xk1 @ pinv(xk, tol) @ b
        herm_defect = float(np.linalg.norm(p - p.conj().T))
        ph = 0.5 * (p + p.conj().T)
        min_eig = float(np.min(np.linalg.eigvalsh(ph)))
        scale = max(float(np.linalg.norm(ph)), 1.0)
        psd_ok = min_eig >= -tol.psd * scale
        reports.append(WindowReport(k, kernel_ok, psd_ok, min_eig, herm_defect))
    return reports


def disconjugacy_check(
    sys: SymplecticSystem,
    nu: float,
    M: int,
    N: int,
    tol: Tolerances = DEFAULT,
) -> tuple[bool, list[WindowReport]]:
    """Kernel inclusion and -X_{k+1} X_k^+ B_k >= 0 along [M, N].

    Near-rank-deficient X_k makes the kernel test fragile; the witness list
    carries the min-eigenvalues and Hermitian defects so callers can judge the
    margin instead of trusting the bare flag.
    """
    if not (0 <= M <= N):
        raise RangeMismatch(f"need 0 <= M <= N, got ({M}, {N})")
    z = principal_solution(sys, nu, N)
    reports = _window_reports(sys, z, M, N, tol)
    return all(r.ok for r in reports), reports


@dataclasses.dataclass
class ScanResult:
    onset: int | None            # smallest M certified within the horizon, None if not found
    horizon: int
    inconclusive: bool = True    # a finite scan never certifies [M, infinity)

    @property
    def found(self) -> bool:
        return self.onset is not None


def nonoscillation_scan(sys: SymplecticSystem, nu: float, K: int, tol: Tolerances = DEFAULT) -> ScanResult:
    """Smallest M <= K such that disconjugacy holds on every window [M, N], N <= K.

    One backward pass per N; within each pass the first index after the last
    failure bounds the admissible M, and the scan maximum over N is the onset.
    The last few window indices are vacuous (the terminal X vanishes), so an
    onset inside the top margin of the horizon cannot be told apart from
    oscillation and is reported as not found.
    """
    if K < 1:
        raise RangeMismatch("scan horizon must be at least 1")
    margin = max(1, K // 8)
    onset = 0
    for N in range(K + 1):
        z = principal_solution(sys, nu, N)
        reports = _window_reports(sys, z, 0, N, tol)
        m_n = 0
        for r in reports:
            if not r.ok:
                m_n = r.k + 1
        onset = max(onset, m_n)
        if onset > K - margin:
            return ScanResult(None, K)
    return ScanResult(onset, K)


def controllability_check(sys: SymplecticSystem, interval: tuple[int, int], tol: Tolerances = DEFAULT) -> bool:
    """True iff 0 = B_k u_{k+1}, u_k = D_k u_{k+1} on [K, M-1] forces u = 0.

    Stacks the constraints into one linear map on (u_K, ..., u_M) and tests
    for a trivial kernel.
    """
    k0, m = interval
    if m <= k0:
        raise RangeMismatch(f"interval must satisfy M > K, got ({k0}, {m})")
    n = sys.n
    steps = m - k0
    unknowns = n * (steps + 1)
    rows = np.zeros((2 * n * steps, unknowns), dtype=complex)
    for i, k in enumerate(range(k0, m)):
        _, b, _, d, _ = sys.blocks(k)
        r0 = 2 * n * i
        cur = n * i
        nxt = n * (i + 1)
        rows[r0 : r0 + n, nxt : nxt + n] = b
        rows[r0 + n : r0 + 2 * n, cur : cur + n] = np.eye(n)
        rows[r0 + n : r0 + 2 * n, nxt : nxt + n] = -d
    rank, _ = rank_kernel(rows, tol.rank)
    return rank == unknowns


def admissibility_profile(sys: SymplecticSystem, z, a: int, b: int) -> np.ndarray:
    """Per-step norms of x_k - A_k x_{k+1} - B_k u_{k+1} on [a, b]."""
    values = z.values if isinstance(z, VectorSolution) else np.asarray(z, dtype=complex)
    if a < 0 or b + 1 >= values.shape[0]:
        raise RangeMismatch(f"range [{a},{b}] outside truncation")
    n = values.shape[1] // 2
    out = np.zeros(b - a + 1)
    for i, k in enumerate(range(a, b + 1)):
        ak, bk = sys.blocks(k)[:2]
        r = values[k, :n] - ak @ values[k + 1, :n] - bk @ values[k + 1, n:]
        out[i] = np.linalg.norm(r)
    return out


def is_admissible(sys: SymplecticSystem, z, a: int, b: int, tol: Tolerances = DEFAULT) -> bool:
    values = z.values if isinstance(z, VectorSolution) else np.asarray(z, dtype=complex)
    res = admissibility_profile(sys, z, a, b)
    scales = 1.0 + np.linalg.norm(values[a : b + 1], axis=1) + np.linalg.norm(values[a + 1 : b + 2], axis=1)
    return bool(np.all(res <= tol.res * scales))


def _c_lambda(sys, k, lam):
    a, b, c, d, w = sys.blocks(k)
    return c + lam * w @ a


def _d_lambda(sys, k, lam):
    a, b, c, d, w = sys.blocks(k)
    return d + lam * w @ b


def quadratic_functional(sys: SymplecticSystem, z, lam: complex, K: int) -> complex:
    """Truncated quadratic functional

    F_lam(z) = -sum_{k=0}^{K} { x_{k+1}^* C_k^*(lam) A_k x_{k+1}
               + 2 Re(x_{k+1}^* C_k^*(lam) B_k u_{k+1})
               + u_{k+1}^* D_k^*(lam) B_k u_{k+1} }

    with C_k(lam) = C_k + lam W_k A_k and D_k(lam) = D_k + lam W_k B_k.
    """
    values = z.values if isinstance(z, VectorSolution) else np.asarray(z, dtype=complex)
    if K + 1 >= values.shape[0]:
        raise RangeMismatch(f"K={K} exceeds stored truncation")
    n = values.shape[1] // 2
    total = 0.0 + 0.0j
    for k in range(K + 1):
        a, b = sys.blocks(k)[:2]
        cl = _c_lambda(sys, k, lam).conj().T
        dl = _d_lambda(sys, k, lam).conj().T
        xk1 = values[k + 1, :n]
        uk1 = values[k + 1, n:]
        total += xk1.conj() @ cl @ a @ xk1
        total += 2.0 * np.real(xk1.conj() @ cl @ b @ uk1)
        total += uk1.conj() @ dl @ b @ uk1
    return complex(-total)


def quadratic_functional_reduced(sys: SymplecticSystem, z, lam: complex, K: int, tol: Tolerances = DEFAULT) -> complex:
    """Reduced form for admissible z: sum rho_k^* x_k plus the boundary term [u^* x]_0^{K+1}."""
    values = z.values if isinstance(z, VectorSolution) else np.asarray(z, dtype=complex)
    if not is_admissible(sys, values, 0, K, tol):
        raise NotAdmissible("reduced functional requires an admissible sequence")
    n = values.shape[1] // 2
    total = 0.0 + 0.0j
    for k in range(K + 1):
        rho = values[k, n:] - _c_lambda(sys, k, lam) @ values[k + 1, :n] - _d_lambda(sys, k, lam) @ values[k + 1, n:]
        total += rho.conj() @ values[k, :n]
    boundary = values[K + 1, n:].conj() @ values[K + 1, :n] - values[0, n:].conj() @ values[0, :n]
    return complex(total + boundary)


def functional_shift_check(
    sys: SymplecticSystem,
    z,
    lam: float,
    nu: float,
    K: int,
    tol: Tolerances = DEFAULT,
) -> float:
    """Residual of F_lam(z) = F_nu(z) + (nu - lam) <z, z> on [0, K] for admissible z.

    The identity holds with this truncation convention for real spectral
    parameters; both sums and the semi-inner product run over [0, K].
    """
    values = z.values if isinstance(z, VectorSolution) else np.asarray(z, dtype=complex)
    if not is_admissible(sys, values, 0, K, tol):
        raise NotAdmissible("shift identity requires an admissible sequence")
    f_lam = quadratic_functional(sys, values, lam, K)
    f_nu = quadratic_functional(sys, values, nu, K)
    inner = semi_inner(sys, values, values, 0, K)
    return float(abs(f_lam - f_nu - (nu - lam) * inner))
