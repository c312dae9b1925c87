"""Forward/backward propagation, semi-inner products and the Lagrange identity.

The recurrence is time-reversed: the natural step maps index k+1 to k,
z_k = S_k(lambda) z_{k+1} - J Psi_k f_k.  Forward stepping uses the exact
inverse S(lambda)^{-1} = -J S(conj lambda)^* J, so round trips are cheap and
stable.  Horizons are explicit everywhere; nothing here evaluates at infinity.
"""

from __future__ import annotations

import dataclasses

import numpy as np

from .errors import NotASolution, NumericFailure, RangeMismatch
from .system import SymplecticSystem
from .tolerances import DEFAULT, OVERFLOW_LIMIT, Tolerances


@dataclasses.dataclass
class VectorSolution:
    """A 2n-vector sequence z_0..z_{K+1} attached to a spectral parameter.

    ``forcing`` (if present) holds f_0..f_{K+1}; only rows 0..K enter the
    recurrence.  ``patch_window`` marks a trivialization patch on which the
    sequence is not a solution.
    """

    lam: complex
    values: np.ndarray                     # (K+2, 2n)
    forcing: np.ndarray | None = None      # (K+2, 2n) or None
    patch_window: tuple[int, int] | None = None

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=complex)
        if self.values.ndim != 2 or self.values.shape[0] < 2 or self.values.shape[1] % 2:
            raise RangeMismatch(f"vector solution values must be (K+2, 2n), got {self.values.shape}")
        if self.forcing is not None:
            self.forcing = np.asarray(self.forcing, dtype=complex)
            if self.forcing.shape != self.values.shape:
                raise RangeMismatch("forcing must match the value sequence shape")

    @property
    def horizon(self) -> int:
        return self.values.shape[0] - 2

    @property
    def n(self) -> int:
        return self.values.shape[1] // 2

    @property
    def x(self) -> np.ndarray:
        return self.values[:, : self.n]

    @property
    def u(self) -> np.ndarray:
        return self.values[:, self.n :]

    def forcing_at(self, k: int) -> np.ndarray:
        if self.forcing is None:
            return np.zeros(self.values.shape[1], dtype=complex)
        return self.forcing[k]


@dataclasses.dataclass
class MatrixSolution:
    """A 2n x m matrix sequence Z_0..Z_{K+1}; columns solve (S_lambda) with f=0."""

    lam: complex
    values: np.ndarray                     # (K+2, 2n, m)

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=complex)
        if self.values.ndim != 3 or self.values.shape[1] % 2:
            raise RangeMismatch(f"matrix solution values must be (K+2, 2n, m), got {self.values.shape}")

    @property
    def horizon(self) -> int:
        return self.values.shape[0] - 2

    @property
    def n(self) -> int:
        return self.values.shape[1] // 2

    @property
    def ncols(self) -> int:
        return self.values.shape[2]

    @property
    def X(self) -> np.ndarray:
        return self.values[:, : self.n, :]

    @property
    def U(self) -> np.ndarray:
        return self.values[:, self.n :, :]

    def column(self, j: int) -> VectorSolution:
        return VectorSolution(self.lam, self.values[:, :, j].copy())

    def right_multiplied(self, c: np.ndarray) -> "MatrixSolution":
        return MatrixSolution(self.lam, self.values @ c)


def _forcing_term(sys: SymplecticSystem, k: int, f_k) -> np.ndarray:
    # -J Psi f = (0 ; W f^x): only the top block of f enters
    shape = (2 * sys.n,) if np.ndim(f_k) == 1 else (2 * sys.n, np.shape(f_k)[1])
    out = np.zeros(shape, dtype=complex)
    out[sys.n :] = sys.weight(k) @ np.asarray(f_k, dtype=complex)[: sys.n]
    return out


def step_backward(sys, z_next, k, lam, f_k=None):
    """One time-reversed step: z_k from z_{k+1}."""
    z_next = np.asarray(z_next, dtype=complex)
    z = sys.s_lambda(k, lam) @ z_next
    if f_k is not None:
        z = z + _forcing_term(sys, k, f_k)
    return z


def step_forward(sys, z_k, k, lam, f_k=None):
    """Inverse of step_backward via S(lambda)^{-1} = -J S(conj lambda)^* J."""
    z_k = np.asarray(z_k, dtype=complex)
    if f_k is not None:
        z_k = z_k - _forcing_term(sys, k, f_k)
    return sys.s_lambda_inv(k, lam) @ z_k


def _check_overflow(values: np.ndarray, k: int) -> None:
    if np.max(np.abs(values)) > OVERFLOW_LIMIT:
        raise NumericFailure(f"propagation overflow at k={k}")


def propagate_forward(sys, initial, lam, K, forcing=None):
    """Propagate initial data at k=0 up to k=K+1.

    ``initial`` may be a 2n-vector or a 2n x m matrix; returns the matching
    solution object.  Aborts with NumericFailure at the first overflowing step.
    """
    initial = np.asarray(initial, dtype=complex)
    vector = initial.ndim == 1
    shape = (K + 2,) + initial.shape
    values = np.zeros(shape, dtype=complex)
    values[0] = initial
    for k in range(K + 1):
        f_k = forcing[k] if forcing is not None else None
        values[k + 1] = step_forward(sys, values[k], k, lam, f_k)
        _check_overflow(values[k + 1], k + 1)
    if vector:
        f = np.asarray(forcing, dtype=complex) if forcing is not None else None
        return VectorSolution(lam, values, f)
    return MatrixSolution(lam, values)


def propagate_backward(sys, terminal, lam, K, forcing=None):
    """Propagate terminal data at k=K+1 down to k=0."""
    terminal = np.asarray(terminal, dtype=complex)
    vector = terminal.ndim == 1
    shape = (K + 2,) + terminal.shape
    values = np.zeros(shape, dtype=complex)
    values[K + 1] = terminal
    for k in range(K, -1, -1):
        f_k = forcing[k] if forcing is not None else None
        values[k] = step_backward(sys, values[k + 1], k, lam, f_k)
        _check_overflow(values[k], k)
    if vector:
        f = np.asarray(forcing, dtype=complex) if forcing is not None else None
        return VectorSolution(lam, values, f)
    return MatrixSolution(lam, values)


def fundamental_matrix(sys, lam, K) -> MatrixSolution:
    """Fundamental solution Phi with Phi_0 = I_{2n}."""
    return propagate_forward(sys, np.eye(2 * sys.n, dtype=complex), lam, K)


def residual_profile(sys, sol: VectorSolution) -> np.ndarray:
    """Per-step norms of J(z_k - S_k z_{k+1}) - Psi_k(lam z_k + f_k)."""
    j = sys.j
    K = sol.horizon
    out = np.zeros(K + 1)
    for k in range(K + 1):
        r = j @ (sol.values[k] - sys.s(k) @ sol.values[k + 1])
        r -= sys.psi(k) @ (sol.lam * sol.values[k] + sol.forcing_at(k))
        out[k] = np.linalg.norm(r)
    return out


def is_solution(sys, sol: VectorSolution, tol: Tolerances = DEFAULT) -> bool:
    res = residual_profile(sys, sol)
    scale = 1.0 + np.linalg.norm(sol.values, axis=1)[:-1]
    return bool(np.all(res <= tol.res * scale))


def _slice_values(z, a: int, b: int) -> np.ndarray:
    values = z.values if isinstance(z, VectorSolution) else np.asarray(z, dtype=complex)
    if a < 0 or b >= values.shape[0] or a > b:
        raise RangeMismatch(f"range [{a},{b}] outside stored truncation of length {values.shape[0]}")
    return values


def semi_inner(sys, z, w, a: int, b: int) -> complex:
    """Weighted pairing sum_{k=a}^{b} z_k^* Psi_k w_k.

    Conjugate-linear in the first argument; reduces to x_z^* W x_w by the
    block structure of Psi.
    """
    zv = _slice_values(z, a, b)
    wv = _slice_values(w, a, b)
    n = zv.shape[1] // 2
    total = 0.0 + 0.0j
    for k in range(a, b + 1):
        total += zv[k, :n].conj() @ sys.weight(k) @ wv[k, :n]
    return complex(total)


def semi_norm_sq(sys, z, a: int, b: int) -> float:
    return float(np.real(semi_inner(sys, z, z, a, b)))


@dataclasses.dataclass
class RelationPair:
    """A pair (z, f) tested for membership in the maximal relation: L(z) = Psi f."""

    z: np.ndarray                # (K+2, 2n)
    f: np.ndarray                # (K+2, 2n); row K+1 unused by the recurrence

    def __post_init__(self):
        self.z = np.asarray(self.z, dtype=complex)
        self.f = np.asarray(self.f, dtype=complex)
        if self.z.shape != self.f.shape or self.z.ndim != 2:
            raise RangeMismatch("z and f must share shape (K+2, 2n)")

    @property
    def horizon(self) -> int:
        return self.z.shape[0] - 2

    def residual_profile(self, sys) -> np.ndarray:
        j = sys.j
        K = self.horizon
        out = np.zeros(K + 1)
        for k in range(K + 1):
            r = j @ (self.z[k] - sys.s(k) @ self.z[k + 1]) - sys.psi(k) @ self.f[k]
            out[k] = np.linalg.norm(r)
        return out

    def is_member(self, sys, tol: Tolerances = DEFAULT) -> bool:
        res = self.residual_profile(sys)
        scale = 1.0 + np.linalg.norm(self.z, axis=1)[:-1]
        return bool(np.all(res <= tol.res * scale))


def canonical_forcing(sys, z_values: np.ndarray) -> np.ndarray:
    """The unique f (zero bottom block) making (z, f) a maximal-relation pair.

    Requires z admissible: the first-block recurrence has no forcing slot, so
    inadmissible sequences admit no f at all; here the top block is solved
    exactly and the residual burden stays on the admissibility defect.
    """
    z_values = np.asarray(z_values, dtype=complex)
    n = z_values.shape[1] // 2
    f = np.zeros_like(z_values)
    for k in range(z_values.shape[0] - 1):
        a, b, c, d, w = sys.blocks(k)
        rhs = z_values[k, n:] - c @ z_values[k + 1, :n] - d @ z_values[k + 1, n:]
        f[k, :n] = np.linalg.solve(w, rhs)
    return f


def pair_from_solution(sys, sol: VectorSolution) -> RelationPair:
    """Fold the spectral parameter into the forcing: (z, lam z + f) is in T_max."""
    f = sol.lam * sol.values
    if sol.forcing is not None:
        f = f + sol.forcing
    return RelationPair(sol.values.copy(), f)


def lagrange_check(sys, pair1: RelationPair, pair2: RelationPair, K: int, tol: Tolerances = DEFAULT) -> float:
    """Residual of the summed Lagrange identity on [0, K].

    For maximal-relation pairs (z,f), (w,g):
    sum_k (w_k^* Psi f_k - g_k^* Psi z_k) = w_0^* J z_0 - w_{K+1}^* J z_{K+1}.
    """
    if K + 1 > pair1.horizon + 1 or K + 1 > pair2.horizon + 1:
        raise RangeMismatch(f"K={K} exceeds stored truncation")
    for pair in (pair1, pair2):
        if not pair.is_member(sys, tol):
            raise NotASolution("input pair violates the maximal-relation residual bound")
    z, f = pair1.z, pair1.f
    w, g = pair2.z, pair2.f
    lhs = 0.0 + 0.0j
    for k in range(K + 1):
        psi = sys.psi(k)
        lhs += w[k].conj() @ psi @ f[k] - g[k].conj() @ psi @ z[k]
    j = sys.j
    rhs = w[0].conj() @ j @ z[0] - w[K + 1].conj() @ j @ z[K + 1]
    return float(abs(lhs - rhs))


CSV_PRECISION = 17


def write_sequence_csv(path, values: np.ndarray) -> None:
    """Dump a (K+2, 2n) sequence: header k, re_z1, im_z1, ..., re_z2n, im_z2n."""
    values = np.asarray(values, dtype=complex)
    dim = values.shape[1]
    header = ["k"]
    for i in range(1, dim + 1):
        header += [f"re_z{i}", f"im_z{i}"]
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(",".join(header) + "\n")
        for k, row in enumerate(values):
            cells = [str(k)]
            for entry in row:
                cells.append(f"{entry.real:.{CSV_PRECISION}g}")
                cells.append(f"{entry.imag:.{CSV_PRECISION}g}")
            fh.write(",".join(cells) + "\n")


def read_sequence_csv(path) -> np.ndarray:
    """Inverse of write_sequence_csv; validates the header and row indices."""
    from .errors import FileError

    try:
        with open(path, "r", encoding="utf-8") as fh:
            lines = [ln.strip() for ln in fh if ln.strip()]
    except OSError as exc:
        raise FileError(f"cannot read {path}: {exc}") from exc
    if not lines:
        raise FileError(f"{path}: empty file")
    header = [h.strip() for h in lines[0].split(",")]
    if header[0] != "k" or (len(header) - 1) % 2:
        raise FileError(f"{path}: malformed header")
    dim = (len(header) - 1) // 2
    rows = np.zeros((len(lines) - 1, dim), dtype=complex)
    for i, line in enumerate(lines[1:]):
        cells = line.split(",")
        if len(cells) != len(header):
            raise FileError(f"{path}: row {i} has {len(cells)} cells, expected {len(header)}")
        if int(float(cells[0])) != i:
            raise FileError(f"{path}: row index {cells[0]} out of order (expected {i})")
        numbers = list(map(float, cells[1:]))
        rows[i] = np.array(numbers[0::2]) + 1j * np.array(numbers[1::2])
    return rows
