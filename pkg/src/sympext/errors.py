"""Exception hierarchy shared by all sympext modules."""

from __future__ import annotations


class SympextError(Exception):
    """Base class for every error raised by this package."""


class NumericFailure(SympextError):
    """A numerical routine failed (decomposition did not converge, overflow, ...)."""


class NotHermitian(SympextError):
    """Input matrix violates the Hermitian precondition."""


class DimensionMismatch(SympextError):
    """Matrix or sequence shapes are inconsistent."""


class RangeMismatch(SympextError):
    """An index range falls outside the stored truncation."""


class NotSymplectic(SympextError):
    """S_k fails the symplectic identity at step ``k``."""

    def __init__(self, k: int, defect: float):
        self.k = k
        self.defect = defect
        super().__init__(f"coefficient matrix at k={k} is not symplectic (defect {defect:.3e})")


class WeightNotPositive(SympextError):
    """Weight block at step ``k`` is not Hermitian positive definite."""

    def __init__(self, k: int, detail: str = ""):
        self.k = k
        super().__init__(f"weight matrix at k={k} is not Hermitian positive definite{detail}")


class NotASolution(SympextError):
    """A sequence handed in as a solution violates the residual bound."""


class NotAdmissible(SympextError):
    """Sequence violates the first-block recurrence."""


class NotControllable(SympextError):
    """The controllability subsystem has a nontrivial solution."""


class Oscillatory(SympextError):
    """No disconjugacy onset was found within the scanned horizon."""


class NotConverged(SympextError):
    """Anchor iteration did not converge; carries the convergence history."""

    def __init__(self, message: str, history=None):
        self.history = history or []
        super().__init__(message)


class SingularX(SympextError):
    """X-block is singular at step ``j`` where invertibility is required."""

    def __init__(self, j: int):
        self.j = j
        super().__init__(f"X-block singular at k={j}")


class NotRecessive(SympextError):
    """Candidate basis failed the recessive certificate."""


class RankDeficientComplement(SympextError):
    """Complement bottom block has rank below d-n."""


class SubmatrixCheckFailed(SympextError):
    """Leading submatrix of the boundary-form matrix differs from [[0,I],[-I,0]]."""


class ConfigError(SympextError):
    """Invalid run configuration; ``path`` points at the offending key."""

    def __init__(self, path: str, message: str):
        self.path = path
        super().__init__(f"{path}: {message}")


class FileError(SympextError):
    """A data file is missing or malformed."""
