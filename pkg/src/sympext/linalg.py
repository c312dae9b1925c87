"""Dense complex linear algebra primitives.

Everything operates on ``numpy`` complex matrices; these wrappers pin down the
rank/kernel/definiteness conventions (relative thresholds, ascending
eigenvalues, orthonormal kernels) that the rest of the package relies on.
"""

from __future__ import annotations

import enum

import numpy as np

from .errors import DimensionMismatch, NotHermitian, NumericFailure
from .tolerances import DEFAULT, Tolerances

ComplexMatrix = np.ndarray


class Definiteness(enum.Enum):
    POSITIVE_DEFINITE = "PositiveDefinite"
    POSITIVE_SEMIDEFINITE = "PositiveSemidefinite"
    INDEFINITE = "Indefinite"


def as_matrix(data) -> ComplexMatrix:
    """Coerce to a finite 2-D complex array."""
    m = np.asarray(data, dtype=complex)
    if m.ndim != 2 or m.size == 0:
        raise DimensionMismatch(f"expected a nonempty 2-D matrix, got shape {m.shape}")
    if not np.all(np.isfinite(m.view(float))):
        raise NumericFailure("matrix contains NaN or Inf entries")
    return m


def pinv(m: ComplexMatrix, tol: Tolerances = DEFAULT) -> ComplexMatrix:
    """Moore-Penrose generalized inverse via SVD with a relative rank cutoff."""
    m = as_matrix(m)
    try:
        u, s, vh = np.linalg.svd(m, full_matrices=False)
    except np.linalg.LinAlgError as exc:  # pragma: no cover - LAPACK rarely fails here
        raise NumericFailure(f"SVD did not converge: {exc}") from exc
    cutoff = tol.rank * (s[0] if s.size else 0.0)
    inv = np.where(s > cutoff, 1.0 / np.where(s > cutoff, s, 1.0), 0.0)
    return (vh.conj().T * inv) @ u.conj().T


def rank_kernel(m: ComplexMatrix, rank_tol: float | None = None) -> tuple[int, ComplexMatrix]:
    """Numeric rank and an orthonormal kernel basis.

    Rank counts singular values above ``rank_tol * sigma_max``; the returned
    kernel basis has shape (cols, cols - rank) and satisfies M @ kern ~ 0.
    """
    m = as_matrix(m)
    if rank_tol is None:
        rank_tol = DEFAULT.rank
    if rank_tol <= 0:
        raise ValueError("rank tolerance must be positive")
    try:
        _, s, vh = np.linalg.svd(m)
    except np.linalg.LinAlgError as exc:  # pragma: no cover
        raise NumericFailure(f"SVD did not converge: {exc}") from exc
    smax = s[0] if s.size else 0.0
    rank = int(np.sum(s > rank_tol * smax)) if smax > 0 else 0
    kernel = vh[rank:].conj().T  # (cols, cols - rank), orthonormal columns
    return rank, kernel


def hermitian_defect(m: ComplexMatrix) -> float:
    m = np.asarray(m, dtype=complex)
    return float(np.linalg.norm(m - m.conj().T))


def hermitian_eigen(m: ComplexMatrix, tol: Tolerances = DEFAULT) -> tuple[np.ndarray, ComplexMatrix]:
    """Eigen-decomposition of a Hermitian matrix, eigenvalues ascending."""
    m = as_matrix(m)
    if m.shape[0] != m.shape[1]:
        raise DimensionMismatch(f"expected square matrix, got {m.shape}")
    scale = np.linalg.norm(m)
    if hermitian_defect(m) > tol.herm * max(scale, 1e-300):
        raise NotHermitian(f"Hermitian defect {hermitian_defect(m):.3e} exceeds {tol.herm:.1e} * |M|")
    h = 0.5 * (m + m.conj().T)
    try:
        vals, vecs = np.linalg.eigh(h)
    except np.linalg.LinAlgError as exc:  # pragma: no cover
        raise NumericFailure(f"eigh did not converge: {exc}") from exc
    residual = np.linalg.norm(vecs @ np.diag(vals) @ vecs.conj().T - h)
    if residual > tol.eig * max(scale, 1.0):
        raise NumericFailure(f"eigen reconstruction residual {residual:.3e} too large")
    return vals, vecs


def definiteness_of(m: ComplexMatrix, tau: float | None = None, tol: Tolerances = DEFAULT) -> Definiteness:
    """Classify a Hermitian matrix by its smallest eigenvalue against +-tau*|M|."""
    if tau is None:
        tau = tol.psd
    vals, _ = hermitian_eigen(m, tol)
    scale = max(float(np.max(np.abs(vals))) if vals.size else 0.0, 1e-300)
    smallest = float(vals[0])
    if smallest > tau * scale:
        return Definiteness.POSITIVE_DEFINITE
    if smallest >= -tau * scale:
        return Definiteness.POSITIVE_SEMIDEFINITE
    return Definiteness.INDEFINITE
